"""Exception hierarchy shared by every stage of the pipeline."""


class AccelSpeechError(ValueError):
    """Base class for data errors raised by this package."""


# ingest
class MissingColumn(AccelSpeechError):
    pass


class NonMonotonicTimestamps(AccelSpeechError):
    pass


class TooFewSamples(AccelSpeechError):
    pass


class MalformedRow(AccelSpeechError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


class UpsamplingRequested(AccelSpeechError):
    pass


# dsp
class CutoffAboveNyquist(AccelSpeechError):
    pass


class NonUniformGrid(AccelSpeechError):
    pass


class SegmentTooShort(AccelSpeechError):
    pass


class EmptySpectrogram(AccelSpeechError):
    pass


# segment / features
class SignalTooShort(AccelSpeechError):
    pass


class RegionTooShort(AccelSpeechError):
    pass


class NonFiniteFeature(AccelSpeechError):
    def __init__(self, region_id, feature_name: str):
        self.region_id = region_id
        self.feature_name = feature_name
        super().__init__(f"region {region_id}: feature {feature_name!r} is not finite")


# ml
class NonFiniteInput(AccelSpeechError):
    pass


class ClassTooSmall(AccelSpeechError):
    pass


class EmptyMatrix(AccelSpeechError):
    pass


class SingleClassDataset(UserWarning):
    """Training saw one class only; the model degenerates to a constant."""


# simulate
class BadDuration(AccelSpeechError):
    pass
