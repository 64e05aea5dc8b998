"""Exception types shared across the litpilot package."""


class LitpilotError(Exception):
    """Base class for all domain errors."""


# corpus
class EmptyDocument(LitpilotError):
    pass


class MalformedHeader(LitpilotError):
    pass


# embedding
class EmptyInput(LitpilotError):
    pass


class DegenerateProjection(LitpilotError):
    pass


class InsufficientCorpus(LitpilotError):
    pass


class NonFiniteLoss(LitpilotError):
    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


# retrieval
class DimensionMismatch(LitpilotError):
    pass


# llm gateway
class MissingSlot(LitpilotError):
    def __init__(self, name: str):
        super().__init__(f"missing slot: {name}")
        self.name = name


class UnknownSlot(LitpilotError):
    def __init__(self, name: str):
        super().__init__(f"unknown slot: {name}")
        self.name = name


class BackendFailure(LitpilotError):
    pass


class BackendTimeout(BackendFailure):
    pass


class TransportFailure(BackendFailure):
    pass


class BackendRejected(BackendFailure):
    def __init__(self, status: int, body: str):
        super().__init__(f"backend rejected request: status {status}")
        self.status = status
        self.body = body


# query engine
class EmptyQuery(LitpilotError):
    pass


class NoPluginMatched(LitpilotError):
    pass


class PluginFailure(LitpilotError):
    pass


# investigation
class InvalidK(LitpilotError):
    pass


class ScholarNotFound(LitpilotError):
    pass


class LimitExceeded(LitpilotError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"got {count} papers, maximum limit is {limit}")
        self.count = count
        self.limit = limit


class UnknownDocId(LitpilotError):
    def __init__(self, doc_id: str):
        super().__init__(f"unknown doc id: {doc_id}")
        self.doc_id = doc_id


class DuplicateDocId(LitpilotError):
    pass


# reading
class EmptyQuestion(LitpilotError):
    pass


class CountOutOfRange(LitpilotError):
    def __init__(self, count: int, lo: int = 2, hi: int = 5):
        super().__init__(f"got {count} papers, expected between {lo} and {hi}")
        self.count = count
        self.lo = lo
        self.hi = hi


# writing
class EmptySource(LitpilotError):
    pass


class EmptyDraft(LitpilotError):
    pass


class UnparseableOutput(LitpilotError):
    pass


# evalkit
class EmptyReferences(LitpilotError):
    pass


# config
class ConfigError(LitpilotError):
    pass
