import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("KRA_SAT_LOG_LEVEL", "INFO").upper()
CONFIG_DIR = Path(
    os.getenv("KRA_SAT_CONFIG_DIR", Path(__file__).resolve().parent.parent / "config")
)
WORKERS = os.getenv("KRA_SAT_WORKERS")
