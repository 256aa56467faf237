"""Speech and speaker inference from smartphone accelerometer traces.

Pipeline: ingest -> dsp -> segment -> features -> ml, with a synthetic
vibration-channel simulator supplying ground truth.
"""

__version__ = "0.1.0"
