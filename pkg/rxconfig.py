import os
from pathlib import Path

import reflex as rx

# Directory holding manifest.toml and the trace files it lists
data_dir = Path(os.environ.get("STADIA_DATASET_DIR", Path.home() / "stadia-dataset"))

config = rx.Config(
    app_name="stadia_inspector",
)
