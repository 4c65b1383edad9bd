from .dispatch import dispatch, build_parser, EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL

__all__ = ["dispatch", "build_parser", "EXIT_OK", "EXIT_USAGE", "EXIT_NUMERICAL"]
