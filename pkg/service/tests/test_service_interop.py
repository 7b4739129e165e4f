"""Wire compatibility with the pipeline's HTTP clients.

Runs a real server on a loopback port and drives it with the matching
pipeline's own client classes, proving both sides agree on the payloads
(base64 float32 vectors, score lists) and on error behavior.
"""

import threading
import time

import numpy as np
import pytest
import uvicorn

from kgmatch import (
    ProviderError,
    RemoteEmbeddingProvider,
    RemoteScorer,
    build_matrix,
    extract_bundles,
    parse_ntriples,
    topk_candidates,
)
from kgmatch_service.app import create_app

from conftest import EMBEDDER_ID, SCORER_ID


@pytest.fixture(scope="module")
def base_url(service_config):
    config = uvicorn.Config(
        create_app(service_config), host="127.0.0.1", port=0, log_level="warning",
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def test_remote_embedding_provider_round_trip(base_url):
    provider = RemoteEmbeddingProvider(base_url, EMBEDDER_ID)
    vectors = provider.embed(["heart", "cardiac muscle", "bone"])
    assert vectors.shape == (3, 64)
    assert vectors.dtype == np.float32
    norms = np.linalg.norm(vectors, axis=1)
    assert np.all(np.abs(norms - 1.0) <= 1e-5)
    again = provider.embed(["heart", "cardiac muscle", "bone"])
    assert np.array_equal(vectors, again)


def test_remote_embedding_provider_unknown_model(base_url):
    provider = RemoteEmbeddingProvider(base_url, "absent-model")
    with pytest.raises(ProviderError):
        provider.embed(["heart"])


def test_remote_scorer_round_trip(base_url):
    scorer = RemoteScorer(base_url, SCORER_ID)
    scores = scorer.score([("heart", "heart"), ("heart", "bone"), ("lung", "organ")])
    assert len(scores) == 3
    assert all(0.0 <= s <= 1.0 for s in scores)


def test_remote_scorer_unknown_model(base_url):
    scorer = RemoteScorer(base_url, "absent-model")
    with pytest.raises(ProviderError):
        scorer.score([("a", "b")])


SOURCE_NT = """
<http://a#Heart> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://a#Heart> <http://www.w3.org/2000/01/rdf-schema#label> "heart" .
<http://a#Lung> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://a#Lung> <http://www.w3.org/2000/01/rdf-schema#label> "lung" .
"""

TARGET_NT = """
<http://b#Cor> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://b#Cor> <http://www.w3.org/2000/01/rdf-schema#label> "heart" .
<http://b#Pulmo> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://b#Pulmo> <http://www.w3.org/2000/01/rdf-schema#label> "lung" .
"""


def test_blocking_stage_runs_against_the_service(base_url):
    source = parse_ntriples(SOURCE_NT.encode(), "source")
    target = parse_ntriples(TARGET_NT.encode(), "target")
    bundles1, bundles2 = extract_bundles(source), extract_bundles(target)
    provider = RemoteEmbeddingProvider(base_url, EMBEDDER_ID)
    candidates = topk_candidates(
        bundles1, bundles2, source.entities, target.entities, provider, k=1,
    )
    pairs = set(candidates.pairs())
    assert ("http://a#Heart", "http://b#Cor") in pairs
    assert ("http://a#Lung", "http://b#Pulmo") in pairs


def test_build_matrix_through_the_remote_provider(base_url):
    source = parse_ntriples(SOURCE_NT.encode(), "source")
    bundles = extract_bundles(source)
    matrix = build_matrix(bundles, RemoteEmbeddingProvider(base_url, EMBEDDER_ID))
    assert matrix.vectors.shape[0] == len(matrix.keys) > 0
    assert matrix.dim == 64
