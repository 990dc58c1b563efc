"""embedgen: turn judgment-file instance texts into embedding files.

Companion tool for the annoaudit noise auditor: reads the instance texts
out of a judgment jsonl file, encodes them with a sentence-embedding
model, and writes the embeddings in the exact jsonl or binary format the
auditor ingests.
"""

from .encoders import EncoderError, HashingEncoder, get_encoder
from .job import EmbedJobConfig, run_job
from .texts import MissingTextError, read_instance_texts

__version__ = "0.1.0"
