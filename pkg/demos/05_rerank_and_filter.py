"""Re-rank the candidate set, then reduce it to a one-to-one alignment.

The scorer sees text pairs, not vectors: each candidate's bundle pair is
expanded by the pairing strategy, every expansion is scored, and the
maximum becomes the candidate's confidence.  Two filters then run in
order: the confidence cut drops everything below 0.5, and the assignment
filter keeps the maximum-total-confidence one-to-one subset per entity
kind.  The demo scorer is deterministic token overlap; a fine-tuned
cross-encoder plugs in through the same interface.
"""

from pathlib import Path

from kgmatch import (
    HashEmbedder,
    MockScorer,
    PairingStrategy,
    apply_chain,
    default_chain,
    extract_bundles,
    parse_ntriples,
    score_alignment,
    topk_candidates,
)

DATA = Path(__file__).resolve().parent / "data"


def fragment(iri):
    return iri.rsplit("#", 1)[-1]


def show(title, alignment):
    print(f"{title} ({len(alignment)} correspondences)")
    for corr in sorted(alignment, key=lambda c: (-c.confidence, c.pair))[:10]:
        print(f"  {fragment(corr.source):<14} -> {fragment(corr.target):<16} {corr.confidence:.3f}")
    if len(alignment) > 10:
        print(f"  ... and {len(alignment) - 10} more")
    print()


def main():
    source = parse_ntriples(DATA / "source.nt", "source")
    target = parse_ntriples(DATA / "target.nt", "target")
    bundles1 = extract_bundles(source)
    bundles2 = extract_bundles(target)

    candidates = topk_candidates(
        bundles1, bundles2, source.entities, target.entities, HashEmbedder(dim=64), 3
    )
    show("high-recall candidates (cosine confidence)", candidates)

    scored = score_alignment(
        candidates, bundles1, bundles2, PairingStrategy.GROUPED, MockScorer()
    )
    show("after re-ranking (max pair score as confidence)", scored)

    detail = scored.detail(
        "http://left.example/anat#Heart", "http://right.example/anat#Cor"
    )
    print(f"winning text pair for Heart -> Cor: {detail.best_pair}"
          f" out of {detail.pair_count} scored pairs")
    print()

    final = apply_chain(scored, default_chain(threshold=0.5))
    show("after confidence cut (0.5) and one-to-one assignment", final)


if __name__ == "__main__":
    main()
