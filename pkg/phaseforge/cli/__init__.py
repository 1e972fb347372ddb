#__init__.py
"""
phaseforge CLI module.

This package contains individual command implementations
for the phaseforge command-line interface.
"""
