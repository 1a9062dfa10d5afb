"""Content-aware text logo layout synthesis.

A conditional GAN that maps glyph images plus their text to a sequence of
bounding boxes on a canvas, with differentiable glyph compositing, dual
(sequence + image) discriminators, and an explicit overlap penalty.
"""

__version__ = "0.1.0"
