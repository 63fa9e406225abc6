"""Tiny helper: expose a dataclass as ``--field value`` command-line overrides."""
import argparse
from dataclasses import fields


def parse_into(cls, argv=None, description=None):
    ap = argparse.ArgumentParser(description=description)
    for f in fields(cls):
        ap.add_argument(f"--{f.name.replace('_', '-')}", type=type(f.default), default=f.default)
    return cls(**vars(ap.parse_args(argv)))
