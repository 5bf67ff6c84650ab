"""Encode corpus paragraphs and rendered queries with pretrained sentence
encoders, writing the embeddings.jsonl format the destrank engine reads, or
serving vectors over HTTP."""

__version__ = "0.1.0"
