"""Allow running as python -m ischemic_fbp."""

from ischemic_fbp.cli import app

if __name__ == "__main__":
    app()
