"""
Skia Shadow Branch Decoding Simulator

A trace-driven model of a decoupled CPU front end that decodes the unexecuted
bytes of fetched cache lines for branches the BTB has not seen yet.
"""
