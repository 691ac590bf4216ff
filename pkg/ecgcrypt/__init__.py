__version__ = '0.1.0'

from .cipher import ChaoticKey, CipherConfig, apply_stream, keystream_bytes  # noqa: F401
from .ingest import SynthConfig, segmentize, synth_ecg  # noqa: F401
from .security import SecurityReport, run_audit  # noqa: F401
from .transport import EncryptedFrame, decode_frames, encode_frame  # noqa: F401
from .pipeline import Pipeline, PipelineStats, run_stream  # noqa: F401
