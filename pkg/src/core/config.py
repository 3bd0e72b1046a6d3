import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE = os.getenv("LOG_FILE", "fieldnet.log")
    PROJECT_ROOT = Path(__file__).parent.parent.parent
    DATA_DIR = Path(__file__).parent.parent / "scenario" / "data"

    # Output locations for traces, metrics and sweep tables
    OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", "fieldnet_data"))

    # Run defaults (a scenario document always wins over these)
    DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "42"))
    # Seconds the clock may run past the horizon so in-flight data lands
    SETTLE_SECONDS = min(max(int(os.getenv("SETTLE_SECONDS", "3600")), 0), 86400)

    # Sweep Configuration
    # Enforce upper bounds on parallelism
    SWEEP_WORKERS = min(max(int(os.getenv("SWEEP_WORKERS", "1")), 1), 32)

    # Peak memory source: "rusage" (platform) or "tracemalloc" (allocation counter)
    MEMORY_SOURCE = os.getenv("MEMORY_SOURCE", "rusage").lower()


config = Config()
