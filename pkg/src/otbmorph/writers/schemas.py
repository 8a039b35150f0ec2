"""
PyArrow schemas for score stores.
"""

import pyarrow as pa

SCORE_SCHEMA = pa.schema(
    [
        ("trial", pa.int64()),
        ("kind", pa.string()),  # genuine | impostor | cross_key
        ("score", pa.float64()),
    ]
)

SCORE_KINDS = ("genuine", "impostor", "cross_key")
