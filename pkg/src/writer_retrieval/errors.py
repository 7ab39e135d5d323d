"""Exception types raised by the pipeline stages."""


class WriterRetrievalError(Exception):
    """Base class for all pipeline errors."""


class DegenerateHistogram(WriterRetrievalError):
    """Image has a single intensity value; no threshold exists."""


class InvalidConfig(WriterRetrievalError):
    """Configuration value outside its valid range."""


class EmptyDescriptor(WriterRetrievalError):
    """Descriptor window carries zero gradient energy."""


class FormatError(WriterRetrievalError):
    """Malformed manifest or binary interchange file."""


class UnknownEntity(WriterRetrievalError):
    """Referenced entity id is not present in the manifest."""


class TooFewPoints(WriterRetrievalError):
    """Fewer descriptors than requested clusters."""


class DimMismatch(WriterRetrievalError):
    """Vector dimensions do not agree."""


class EmptySet(WriterRetrievalError):
    """Operation requires a non-empty descriptor or encoding set."""


class NoValidTriplets(WriterRetrievalError):
    """No (anchor, positive, negative) triple could be mined."""


class ZeroVector(WriterRetrievalError):
    """An all-zero vector cannot be normalized."""


class TooFewSamples(WriterRetrievalError):
    """Not enough samples to fit the transform."""


class BadDim(WriterRetrievalError):
    """Requested output dimension exceeds what the data supports."""


class EmptyGallery(WriterRetrievalError):
    """Ranking requires at least one gallery item."""


class NoRelevant(WriterRetrievalError):
    """Query has zero relevant gallery items."""


class NoQueries(WriterRetrievalError):
    """Evaluation requires at least one usable query."""


class ListTooShort(WriterRetrievalError):
    """Ranked list shorter than the requested cutoff."""


class InsufficientCorpus(WriterRetrievalError):
    """Corpus lacks the entities an experiment needs."""


class EmptyAfterMerge(WriterRetrievalError):
    """No page yields a complete line group at the requested size."""


class WordTooRare(WriterRetrievalError):
    """Word has too few instances or writers for word-specific retrieval."""
