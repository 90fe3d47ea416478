"""Reference external-model server speaking the tabular-bridge protocol.

Deliberately independent of the training engine's codebase: everything it
knows about the wire format is reimplemented here from the protocol
document, which is exactly what a third-party model integration would do.
"""

__version__ = "0.1.0"
