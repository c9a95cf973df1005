#  Copyright (c) modcs contributors.
# Environment driven settings shared by the solver, analysis and harness modules.
import os

# Enable debug logging for modcs itself
MODCS_DEBUG = os.getenv("MODCS_DEBUG", None) in ["1", "true", "True"]
# The folder to store the structured NDJSON trace. Tracing is off when unset.
MODCS_TRACE = os.environ.get("MODCS_TRACE", None)
# Trace files are named DEFAULT_TRACE_FILE_PREFIX + ".ndjson". Add USER to avoid
# clobbering on shared machines.
DEFAULT_TRACE_FILE_PREFIX = f"modcs_trace_{os.getenv('USER', 'unknown')}_"
# Number of worker threads used for Monte Carlo trials. 1 runs serially.
MODCS_WORKERS = max(1, int(os.getenv("MODCS_WORKERS", "1")))
# Maximum number of subsets an exhaustive enumeration may visit.
MODCS_ENUM_BUDGET = int(os.getenv("MODCS_ENUM_BUDGET", str(10**6)))
# Run the full-size reproduction tests (minutes, not seconds).
MODCS_SLOW_TESTS = os.getenv("MODCS_SLOW_TESTS", "0") in ["1", "true", "True"]
# Return True if test outputs (e.g., temp dirs) should be preserved.
TEST_KEEP_OUTPUT = os.getenv("TEST_KEEP_OUTPUT", "0") in ["1", "true", "True"]
