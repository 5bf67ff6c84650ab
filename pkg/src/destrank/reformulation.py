"""Query reformulation strategies.

Five strategies are supported: passing the query through untouched,
keyword expansion, generated answer passages, a single-sentence paraphrase,
and elaborative subtopic expansion (k subtopics, each with an
information-rich elaboration and optional example destinations).

Each produces a :class:`ReformulatedQuery` that always composes the
original query first, and can be rendered two ways: a flat keyword merge
for sparse retrieval, or a ``[SEP]``-delimited concatenation for dense
encoding.

The prompt templates pin down the exact output shapes the parsers expect
(keyword lists are semicolon-separated, subtopic lines are
"Title - elaboration ... such as A and B").
"""
from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Query
from .errors import MissingDestinationList, NotApplicable, ParseFailure
from .llm_gateway import ChatRequest, LlmGateway

DEFAULT_K_SUBTOPICS = 12


class ReformMethod(str, enum.Enum):
    NO_QR = "no-qr"
    Q2E = "q2e"
    QUERY2DOC = "query2doc"
    GENQR = "genqr"
    EQR = "eqr"


@dataclass(frozen=True)
class PromptOptions:
    few_shot: bool = True
    destination_list: bool = True


@dataclass(frozen=True)
class Subtopic:
    title: str
    elaboration: str
    example_destinations: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.title or not self.elaboration:
            raise ValueError("subtopic title and elaboration must be non-empty")


@dataclass(frozen=True)
class ReformulatedQuery:
    qid: str
    method: ReformMethod
    original: str
    segments: tuple[Subtopic, ...] = ()
    raw_expansion: str = ""
    k: Optional[int] = None
    options: PromptOptions = PromptOptions()


SYSTEM_PROMPT = "You are a travel destination search assistant."

# {query}, {k}, {destination_list} are filled by build_prompt.
TEMPLATES = {
    ReformMethod.Q2E: (
        "Expand the travel destination query below with diverse related keywords "
        "and phrases that cover its possible subtopics.\n"
        "Output a single line of keywords separated by semicolons, nothing else.\n"
        'Query: "{query}"'
    ),
    ReformMethod.QUERY2DOC: (
        "Write three short passages, each describing one travel destination that "
        "answers the query below.\n"
        'Format each passage as "N. City, Country: description" on its own line.\n'
        'Query: "{query}"'
    ),
    ReformMethod.GENQR: (
        "Rephrase the travel destination query below as a single descriptive "
        "sentence that better reflects the underlying intent.\n"
        "Output only the rephrased sentence.\n"
        'Query: "{query}"'
    ),
    ReformMethod.EQR: (
        "Identify {k} distinct subtopics implied by the travel destination query "
        "below, and elaborate each one with an information-rich description of "
        "what travelers would look for.\n"
        "Output exactly {k} lines, one per subtopic, in the form:\n"
        "Title - elaboration such as Example City 1 and Example City 2.\n"
        'Query: "{query}"'
    ),
}

FEW_SHOT_BLOCKS = {
    ReformMethod.Q2E: (
        "Example:\n"
        'Query: "Top cities for adventure seekers"\n'
        "Output: extreme sports; hiking trails; rock climbing; water sports; skydiving"
    ),
    ReformMethod.QUERY2DOC: (
        "Example:\n"
        'Query: "Top cities for adventure seekers"\n'
        "Output:\n"
        "1. Queenstown, New Zealand: Known as the 'Adventure Capital of the World,' "
        "offering everything from bungee jumping and skydiving to skiing and snowboarding.\n"
        "2. Interlaken, Switzerland: This city is a hub for adventure sports, offering "
        "activities like paragliding, skydiving, and ice climbing.\n"
        "3. Banff, Canada: Located in the heart of the Canadian Rockies, Banff is a "
        "paradise for outdoor enthusiasts."
    ),
    ReformMethod.GENQR: (
        "Example:\n"
        'Query: "Top cities for adventure seekers"\n'
        "Output: Destinations known for offering a wide range of adventurous experiences"
    ),
    ReformMethod.EQR: (
        "Example:\n"
        'Query: "Top cities for adventure seekers"\n'
        "Output:\n"
        "Mountain Adventures - Cities that offer hiking, climbing, and skiing "
        "opportunities in nearby mountain ranges such as Queenstown (New Zealand) and Aspen.\n"
        "Water Sports - Coastal cities known for exceptional surfing, diving, and "
        "sailing activities such as Honolulu and Gold Coast.\n"
        "Jungle Expeditions - Locations that provide guided tours and expeditions into "
        "dense jungles and rainforests such as Manaus and Belize City."
    ),
}

DESTINATION_LIST_PREAMBLE = (
    "When giving example cities, choose only from this list of destinations:"
)

CORRECTIVE_SUFFIX = "\nFollow the required output format exactly."


def build_prompt(
    method: ReformMethod,
    query: Query,
    k: int = DEFAULT_K_SUBTOPICS,
    options: PromptOptions = PromptOptions(),
    destination_names: Optional[Sequence[str]] = None,
) -> str:
    if method is ReformMethod.NO_QR:
        raise NotApplicable("no-qr never prompts the LLM")
    prompt = TEMPLATES[method].format(query=query.text, k=k)
    if options.few_shot:
        prompt += "\n\n" + FEW_SHOT_BLOCKS[method]
    if options.destination_list:
        if destination_names is None:
            raise MissingDestinationList(
                "destination_list option requires destination names"
            )
        prompt += "\n\n" + DESTINATION_LIST_PREAMBLE + "\n" + "\n".join(destination_names)
    return prompt


_EXAMPLES_RE = re.compile(r",?\s+such as\s+(?P<examples>[^.]+)\.?\s*$", re.IGNORECASE)
_SPLIT_TITLE_RE = re.compile(r"\s+-\s+|:\s+")
_LINE_PREFIX_RE = re.compile(r"^\s*(?:[-*•]\s*|\d+[.)]\s*)?")


def _split_examples(clause: str) -> tuple[str, ...]:
    parts = re.split(r",\s*(?:and\s+)?|\s+and\s+", clause)
    return tuple(p.strip() for p in parts if p.strip())


def parse_eqr_output(text: str, requested_k: int) -> list[Subtopic]:
    """Parse subtopic lines of the form "Title - elaboration ... such as A and B."

    "Title: elaboration" is accepted as a fallback separator. A trailing
    "such as ..." clause is lifted out into example_destinations. The number
    of parsed subtopics is whatever the text contains; requested_k is not
    enforced.
    """
    subtopics: list[Subtopic] = []
    for line in text.splitlines():
        line = _LINE_PREFIX_RE.sub("", line).strip()
        if not line:
            continue
        parts = _SPLIT_TITLE_RE.split(line, maxsplit=1)
        if len(parts) != 2:
            continue
        title, body = parts[0].strip(), parts[1].strip()
        if not title or not body or len(title) > 80:
            continue
        examples: tuple[str, ...] = ()
        m = _EXAMPLES_RE.search(body)
        if m:
            examples = _split_examples(m.group("examples"))
            body = body[: m.start()].rstrip(" ,") or body
        subtopics.append(
            Subtopic(title=title, elaboration=body.rstrip("."), example_destinations=examples)
        )
    if not subtopics:
        raise ParseFailure(ReformMethod.EQR.value, text)
    return subtopics


def _parse_flat(method: ReformMethod, text: str) -> str:
    expansion = text.strip()
    if not expansion:
        raise ParseFailure(method.value, text)
    return expansion


def reformulate(
    query: Query,
    method: ReformMethod,
    k: int = DEFAULT_K_SUBTOPICS,
    options: PromptOptions = PromptOptions(),
    gateway: Optional[LlmGateway] = None,
    destination_names: Optional[Sequence[str]] = None,
) -> ReformulatedQuery:
    """Reformulate one query with the given strategy.

    On a malformed LLM response the prompt is retried once with a corrective
    instruction appended; a second failure propagates ParseFailure.
    """
    if method is ReformMethod.NO_QR:
        return ReformulatedQuery(
            qid=query.qid, method=method, original=query.text, options=options
        )
    if gateway is None:
        raise ValueError(f"{method.value} requires an LLM gateway")
    if method is ReformMethod.EQR and k < 1:
        raise ValueError("EQR requires k >= 1")

    prompt = build_prompt(method, query, k=k, options=options,
                          destination_names=destination_names)
    text = _ask(gateway, prompt)
    try:
        return _structure(query, method, k, options, text)
    except ParseFailure:
        text = _ask(gateway, prompt + CORRECTIVE_SUFFIX)
        return _structure(query, method, k, options, text)


def _ask(gateway: LlmGateway, prompt: str) -> str:
    request = ChatRequest(
        model=gateway.model, user_prompt=prompt, system_prompt=SYSTEM_PROMPT
    )
    return gateway.complete(request).text


def _structure(
    query: Query, method: ReformMethod, k: int, options: PromptOptions, text: str
) -> ReformulatedQuery:
    if method is ReformMethod.EQR:
        segments = tuple(parse_eqr_output(text, k))
        return ReformulatedQuery(
            qid=query.qid, method=method, original=query.text,
            segments=segments, k=k, options=options,
        )
    expansion = _parse_flat(method, text)
    return ReformulatedQuery(
        qid=query.qid, method=method, original=query.text,
        raw_expansion=expansion, options=options,
    )


_PUNCT_NORM_RE = re.compile(r"[;,]")
_WS_RE = re.compile(r"\s+")


def _normalize_keywords(text: str) -> str:
    return _WS_RE.sub(" ", _PUNCT_NORM_RE.sub(" ", text)).strip()


def render_sparse(rq: ReformulatedQuery) -> str:
    """Keyword merge: original query followed by all expansion text,
    whitespace-joined, semicolons/commas normalized to spaces, no dedup."""
    parts = [rq.original]
    if rq.segments:
        for seg in rq.segments:
            parts.append(_normalize_keywords(seg.title))
            parts.append(_normalize_keywords(seg.elaboration))
            parts.extend(_normalize_keywords(d) for d in seg.example_destinations)
    elif rq.raw_expansion:
        parts.append(_normalize_keywords(rq.raw_expansion))
    return " ".join(p for p in parts if p)


def render_dense(rq: ReformulatedQuery) -> str:
    """[SEP]-delimited concatenation for the dense encoder: the original
    query, then one " [SEP] title: elaboration" block per subtopic (or a
    single [SEP] block carrying the raw expansion for flat methods)."""
    out = rq.original
    if rq.segments:
        for seg in rq.segments:
            out += f" [SEP] {seg.title}: {seg.elaboration}"
    elif rq.raw_expansion:
        out += f" [SEP] {rq.raw_expansion.strip()}"
    return out


def embedding_key(rq: ReformulatedQuery) -> str:
    """Key under which this query's dense vector is stored."""
    return f"{rq.qid}#{rq.method.value}"


# --- reformulated.jsonl serialization ---

def to_json_obj(rq: ReformulatedQuery) -> dict:
    return {
        "qid": rq.qid,
        "method": rq.method.value,
        "original": rq.original,
        "k": rq.k,
        "options": {
            "few_shot": rq.options.few_shot,
            "destination_list": rq.options.destination_list,
        },
        "segments": [
            {
                "title": s.title,
                "elaboration": s.elaboration,
                "example_destinations": list(s.example_destinations),
            }
            for s in rq.segments
        ],
        "raw_expansion": rq.raw_expansion,
    }


def from_json_obj(obj: dict) -> ReformulatedQuery:
    return ReformulatedQuery(
        qid=obj["qid"],
        method=ReformMethod(obj["method"]),
        original=obj["original"],
        k=obj.get("k"),
        options=PromptOptions(
            few_shot=obj.get("options", {}).get("few_shot", True),
            destination_list=obj.get("options", {}).get("destination_list", True),
        ),
        segments=tuple(
            Subtopic(
                title=s["title"],
                elaboration=s["elaboration"],
                example_destinations=tuple(s.get("example_destinations", [])),
            )
            for s in obj.get("segments", [])
        ),
        raw_expansion=obj.get("raw_expansion", ""),
    )


def save_reformulated(rqs: Sequence[ReformulatedQuery], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for rq in rqs:
            fh.write(json.dumps(to_json_obj(rq), ensure_ascii=False) + "\n")


def load_reformulated(path) -> list[ReformulatedQuery]:
    rqs = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rqs.append(from_json_obj(json.loads(line)))
    return rqs
