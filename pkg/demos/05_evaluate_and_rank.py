"""Run the full composition pipeline in-process: train two models on a
toy piece, sample a batch from each, score the batches against the
training piece and rank the models by entropy deviation.

The command-line tool wraps the same functions; this script shows how to
drive them directly from Python.
"""

import numpy as np

from sscompose import (PitchSequence, evaluate_batch, piece_scores,
                       sample_sequence, train_model)

MODELS = ("M1", "M15")
BATCH_SIZE = 30


def toy_piece(length=250, seed=11):
    rng = np.random.default_rng(seed)
    walk = np.cumsum(rng.integers(-2, 3, length)) % 9
    return PitchSequence(55 + walk, np.arange(length) * 240)


def main():
    train = toy_piece()
    print(f"training piece: {len(train)} notes")

    results = {}
    for name in MODELS:
        model = train_model(name, train, seed=0, states=6, max_iter=40)
        batch = [sample_sequence(model, len(train), seed=i)
                 for i in range(BATCH_SIZE)]
        report = evaluate_batch(train, batch)
        results[name] = report
        print(f"\n{name}: entropy rmse {report.entropy_rmse:.4f}, "
              f"musicality avg {report.musicality_average:.4f}, "
              f"temporal avg {report.temporal_average:.4f}")
        print(f"    mutual information mean {report.mutual_information_mean:.4f}, "
              f"edit distance mean {report.edit_distance_mean:.4f}")

    print("\nranking by entropy-rmse (lower is better):")
    order = sorted(MODELS, key=lambda m: (results[m].criterion("entropy-rmse"), m))
    for rank, name in enumerate(order, 1):
        print(f"  {rank}. {name}  {results[name].criterion('entropy-rmse'):.4f}")

    best = order[0]
    rows = piece_scores(results[best])
    top = min(rows, key=lambda r: r["entropy-rmse"])
    print(f"\nclosest {best} piece to the training entropy: "
          f"piece {top['piece']} (deviation {top['entropy-rmse']:.4f})")


if __name__ == "__main__":
    main()
