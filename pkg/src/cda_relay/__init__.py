"""Cyclic-division-algebra space-time codes and decode-and-forward relaying.

Subpackages by responsibility:

    fieldtower   exact number-field towers (phi, sigma, embeddings, norms)
    stcode       QAM layers, codeword matrices, assembly, non-vanishing dets
    channels     fading models, outage tests, relay channel views
    ddf          activation schedules and relay trial semantics
    decode       ML decoding and the eigenvalue/exponent machinery
    sim          Monte Carlo curves, slope fits, reproducible artifacts
"""

__version__ = "0.1.0"
