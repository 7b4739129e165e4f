"""Turn entities into text bundles and text bundles into scorer inputs.

Each entity contributes its IRI fragment, label-like literals, skos
labels, literals reached through annotation properties (following blank
nodes up to depth three), comment-like literals, and the longest literal
overall — deduplicated by normalized form and grouped into short names
versus long descriptions.
"""

from pathlib import Path

from kgmatch import (
    PairingStrategy,
    build_text_pairs,
    extract_bundle,
    normalize_label,
    parse_ntriples,
)

DATA = Path(__file__).resolve().parent / "data"


def show_bundle(graph, iri):
    bundle = extract_bundle(graph, iri)
    print(f"bundle for {iri}:")
    for item in bundle.items:
        print(f"  [{item.group.value:<5}] {item.origin.value:<19} {item.text!r}")
    print()


def main():
    source = parse_ntriples(DATA / "source.nt", "source")
    target = parse_ntriples(DATA / "target.nt", "target")

    print("normalization splits camel case, strips punctuation, lowercases:")
    for raw in ("BloodVessel", "has_part", "weightInGrams", "TissueStructure"):
        print(f"  {raw!r} -> {normalize_label(raw)!r}")
    print()

    # Kidney shows an annotation-property literal found behind a blank node
    show_bundle(source, "http://left.example/anat#Kidney")
    show_bundle(target, "http://right.example/anat#Ren")

    heart = extract_bundle(source, "http://left.example/anat#Heart")
    cor = extract_bundle(target, "http://right.example/anat#Cor")
    for strategy in PairingStrategy:
        pairs = build_text_pairs(heart, cor, strategy)
        print(f"{strategy.value}: {len(pairs)} scorer input pair(s)")
        for a, b in pairs:
            print(f"  ({a!r}, {b!r})")
        print()


if __name__ == "__main__":
    main()
