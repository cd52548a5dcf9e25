"""Process-level defaults, read from the environment (and `.env` if present)."""

import os

from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("PROXADDR_LOG_LEVEL", "INFO").upper()

# Event budget per scenario; exceeding it signals protocol livelock
MAX_EVENTS = int(os.getenv("PROXADDR_MAX_EVENTS", "10000000"))

# Largest node count for which the diameter is computed exactly
EXACT_DIAMETER_LIMIT = int(os.getenv("PROXADDR_EXACT_DIAMETER_LIMIT", "5000"))

# Regeneration attempts for a disconnected random topology
TOPOLOGY_ATTEMPTS = int(os.getenv("PROXADDR_TOPOLOGY_ATTEMPTS", "100"))

JOBS = int(os.getenv("PROXADDR_JOBS", "1"))
OUTPUT_DIR = os.getenv("PROXADDR_OUTPUT_DIR", "results")
