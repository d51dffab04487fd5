"""
Skia Test Suite

Decoder, predictor and simulator tests. Expected values come from hand-checked
cache lines and seeded synthetic workloads so every run is reproducible.

Markers:
- slow: 500K-instruction trend runs
- oracle: x86 decoder cross-check against capstone (skipped when missing)
"""
