"""
Video Captioning Engine - command-line entry point.

    python app.py synth --out-dir data/ --seed 7
    python app.py vocab --manifest data/manifest.tsv --out data/vocab.tsv
    python app.py train --manifest data/manifest.tsv --vocab data/vocab.tsv --out runs/lstm.vckp
"""

import sys

from src.cli.commands import run

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
