"""Exception hierarchy shared across the destrank modules."""


class DestrankError(Exception):
    """Base class for all destrank errors."""


# --- corpus / dataset loading ---

class MalformedLine(DestrankError):
    def __init__(self, path, line_no, reason=""):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: malformed line{': ' + reason if reason else ''}")


class DuplicateId(DestrankError):
    def __init__(self, dest_id):
        self.dest_id = dest_id
        super().__init__(f"duplicate destination id: {dest_id!r}")


class EmptyDocument(DestrankError):
    def __init__(self, dest_id):
        self.dest_id = dest_id
        super().__init__(f"destination {dest_id!r} has no paragraphs after chunking")


class InvalidCorpus(DestrankError):
    pass


class InvalidDataset(DestrankError):
    pass


class UnknownDestination(DestrankError):
    def __init__(self, qid, dest_id):
        self.qid = qid
        self.dest_id = dest_id
        super().__init__(f"qrels for {qid!r} reference unknown destination {dest_id!r}")


class MissingQrels(DestrankError):
    def __init__(self, qid):
        self.qid = qid
        super().__init__(f"query {qid!r} has no qrels entry")


class DuplicateQid(DestrankError):
    def __init__(self, qid):
        self.qid = qid
        super().__init__(f"duplicate query id: {qid!r}")


# --- llm gateway ---

class NetworkError(DestrankError):
    pass


class ApiError(DestrankError):
    def __init__(self, status, body):
        self.status = status
        self.body = body
        super().__init__(f"chat completion API returned HTTP {status}: {body[:200]}")


class CacheMiss(DestrankError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"cache-only mode: no cached response for request digest {key}")


class MalformedCache(DestrankError):
    def __init__(self, line_no, reason=""):
        self.line_no = line_no
        super().__init__(f"cache line {line_no} is malformed{': ' + reason if reason else ''}")


# --- reformulation ---

class ParseFailure(DestrankError):
    def __init__(self, method, raw_text):
        self.method = method
        self.raw_text = raw_text
        super().__init__(f"could not parse {method} output: {raw_text[:120]!r}")


class MissingDestinationList(DestrankError):
    pass


class NotApplicable(DestrankError):
    pass


# --- sparse retrieval ---

class EmptyCorpus(DestrankError):
    pass


class UnknownParagraph(DestrankError):
    def __init__(self, ref):
        self.ref = ref
        super().__init__(f"unknown paragraph ref: {ref!r}")


# --- dense retrieval ---

class DimMismatch(DestrankError):
    def __init__(self, detail):
        super().__init__(f"embedding dimension mismatch: {detail}")


class MalformedHeader(DestrankError):
    pass


class DuplicateKey(DestrankError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"duplicate embedding key: {key!r}")


class NotPrecomputed(DestrankError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"no precomputed embedding for {key!r}")


# --- scoring ---

class EmptyScores(DestrankError):
    pass


# --- evaluation ---

class EmptyRelevantSet(DestrankError):
    pass


class RankingTooShort(DestrankError):
    pass


class TooFewValues(DestrankError):
    pass


class KeyMismatch(DestrankError):
    pass


class ZeroVariance(DestrankError):
    pass


class MissingRanking(DestrankError):
    def __init__(self, qid):
        self.qid = qid
        super().__init__(f"no ranking found for query {qid!r}")
