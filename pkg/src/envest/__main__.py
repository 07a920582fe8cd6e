"""Entry point for ``python -m envest``."""

from .cli import main

if __name__ == "__main__":
    main()
