"""litpilot: self-hosted scientific-literature assistant.

Three subsystems over a pluggable completion backend: literature
investigation (topic search, scholar survey, review generation), paper
reading (routed Q&A, multi-document comparison), and academic writing
(polishing, terminology-aware translation).
"""

__version__ = "0.1.0"
