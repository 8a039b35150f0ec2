"""
Output writers. Every file is written atomically (temp file, then rename).

Main exports:
- atomic_path, atomic_write_text, atomic_write_bytes
- write_json, write_jsonl, JSONEncoder
- write_frame, write_embeddings, write_trace
- write_scores (Parquet)
- write_image, write_landmarks
- write_ad
"""

from .ad_writer import write_ad
from .atomic import atomic_path, atomic_write_bytes, atomic_write_text
from .csv_writer import write_embeddings, write_frame, write_trace
from .image_writer import write_image, write_landmarks
from .json_writer import JSONEncoder, write_json, write_jsonl
from .parquet_writer import write_scores

__all__ = [
    "JSONEncoder",
    "atomic_path",
    "atomic_write_bytes",
    "atomic_write_text",
    "write_ad",
    "write_embeddings",
    "write_frame",
    "write_image",
    "write_json",
    "write_jsonl",
    "write_landmarks",
    "write_scores",
    "write_trace",
]
