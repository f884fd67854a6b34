"""Service-chain placement on a LEO satellite edge constellation with cloud fallback.

Subpackages follow the pipeline: build a constellation (`topology`), generate
workloads (`requests`), precompute routes (`pathing`), track resources and
constraints (`state`), solve per-request placements (`algorithms`), orchestrate
distributed rounds and experiments (`engine`), and audit results (`oracle`).
"""

__version__ = "0.1.0"
