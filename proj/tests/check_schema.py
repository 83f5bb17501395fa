"""Validate a JSON document against a JSON Schema: check_schema.py SCHEMA DOC."""

import json
import sys

import jsonschema


def main(argv):
    if len(argv) != 3:
        print("usage: check_schema.py SCHEMA DOC", file=sys.stderr)
        return 2
    with open(argv[1]) as f:
        schema = json.load(f)
    with open(argv[2]) as f:
        doc = json.load(f)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    for e in errors[:20]:
        print("/".join(str(p) for p in e.path) or "<root>", ":", e.message, file=sys.stderr)
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
