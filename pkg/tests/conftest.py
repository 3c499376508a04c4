from __future__ import annotations

import numpy as np
import pytest

from halt import corpus, features, nli

PLANTED_N = 2000
PLANTED_SEED = 7


def extract_matrix(dataset: corpus.SyntheticDataset,
                   mask: features.FeatureMask = features.FULL_MASK) -> corpus.FeatureMatrix:
    backend_a = nli.LookupBackend(dataset.scores_a)
    backend_b = nli.LookupBackend(dataset.scores_b)
    rows = np.array([
        features.build_feature_vector(ex, backend_a, backend_b, mask)
        for ex in dataset.examples
    ])
    return corpus.FeatureMatrix(
        ids=[ex.id for ex in dataset.examples],
        rows=rows,
        labels=np.array([ex.label for ex in dataset.examples], dtype=int),
    )


@pytest.fixture(scope="session")
def planted_dataset() -> corpus.SyntheticDataset:
    return corpus.generate_synthetic(PLANTED_N, PLANTED_SEED)


@pytest.fixture(scope="session")
def planted_matrix(planted_dataset) -> corpus.FeatureMatrix:
    return extract_matrix(planted_dataset)
