from __future__ import annotations

import json
import urllib.error
import urllib.parse
import urllib.request

import pytest

from esgminer.httpd import serve_in_thread
from esgminer.service import MinerService

RECORDS = [
    {"id": "h1", "text": "TestCorp envtopic negtone spill crisis"},
    {"id": "h2", "text": "TestCorp soctopic postone award"},
    {"id": "h3", "text": "TestCorp chatter parade"},
    {"id": "h4", "text": "quiet market day"},
]


def request(method: str, url: str, body: bytes | None = None):
    req = urllib.request.Request(url, data=body, method=method)
    if body is not None:
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode("utf-8"))


@pytest.fixture()
def api(tmp_path, gazetteer, relevance_clf, domain_clf, sentiment_clf):
    service = MinerService(
        tmp_path / "store", gazetteer, relevance_clf, domain_clf, sentiment_clf
    )
    server, thread = serve_in_thread(service)
    host, port = server.server_address[:2]
    base = f"http://{host}:{port}"
    yield base, service
    server.shutdown()
    thread.join(timeout=5)


def ingest(base: str, records=RECORDS):
    body = "\n".join(json.dumps(r) for r in records).encode()
    return request("POST", f"{base}/v1/ingest", body)


def test_health_endpoint(api):
    base, _ = api
    status, doc = request("GET", f"{base}/v1/health")
    assert status == 200
    assert doc["status"] == "ok"
    assert set(doc["model_versions"]) == {"relevance", "domain", "sentiment"}


def test_ingest_endpoint(api):
    base, _ = api
    status, doc = ingest(base)
    assert status == 200
    assert doc == {"accepted": 4, "rejected": []}


def test_ingest_reports_bad_lines(api):
    base, _ = api
    body = b'{"id": "a", "text": "TestCorp envtopic"}\n{oops\n'
    status, doc = request("POST", f"{base}/v1/ingest", body)
    assert status == 200
    assert doc["accepted"] == 1
    assert doc["rejected"][0]["line"] == 2


def test_score_endpoint(api):
    base, _ = api
    ingest(base)
    status, doc = request("GET", f"{base}/v1/companies/TestCorp/score")
    assert status == 200
    assert doc["company"] == "TestCorp"
    assert doc["domains"]["Environmental"]["score"] == -1.0
    assert doc["domains"]["Social"]["score"] == 1.0


def test_score_unknown_company_404_with_suggestions(api):
    base, _ = api
    status, doc = request(
        "GET", f"{base}/v1/companies/{urllib.parse.quote('Exxon Mobile')}/score"
    )
    assert status == 404
    assert doc["code"] == "unknown_company"
    assert doc["suggestions"][0] == "ExxonMobil"


def test_headlines_endpoint_filters_and_pages(api):
    base, _ = api
    ingest(base)
    status, doc = request(
        "GET",
        f"{base}/v1/companies/TestCorp/headlines?stage=Sentiment&label=negative",
    )
    assert status == 200
    assert doc["total"] == 1
    assert doc["items"][0]["headline_id"] == "h1"
    status, doc = request(
        "GET", f"{base}/v1/companies/TestCorp/headlines?page=2&page_size=3"
    )
    assert status == 200
    assert doc["total"] == 4
    assert len(doc["items"]) == 1


def test_headlines_bad_stage_is_400(api):
    base, _ = api
    ingest(base)
    status, doc = request("GET", f"{base}/v1/companies/TestCorp/headlines?stage=Nope")
    assert status == 400
    assert doc["code"] == "bad_request"


def test_correction_roundtrip_updates_row_and_score(api):
    base, _ = api
    ingest(base)
    body = json.dumps(
        {"headline_id": "h1", "stage": "Sentiment", "new_label": "positive",
         "author": "reviewer"}
    ).encode()
    status, doc = request("POST", f"{base}/v1/corrections", body)
    assert status == 200
    assert doc["result"]["terminal"]["sentiment"] == "positive"
    assert doc["score"]["domains"]["Environmental"]["score"] == 1.0
    assert doc["event"]["event_id"] == 1

    status, listing = request("GET", f"{base}/v1/corrections")
    assert status == 200
    assert len(listing["events"]) == 1

    # The returned score must byte-match a direct re-query.
    status, requeried = request("GET", f"{base}/v1/companies/TestCorp/score")
    assert requeried == doc["score"]


def test_correction_validation_errors(api):
    base, _ = api
    ingest(base)
    status, doc = request("POST", f"{base}/v1/corrections", b'{"headline_id": "h1"}')
    assert status == 400
    assert "stage" in doc["message"]
    body = json.dumps(
        {"headline_id": "h1", "stage": "Sentiment", "new_label": "sideways",
         "author": "r"}
    ).encode()
    status, doc = request("POST", f"{base}/v1/corrections", body)
    assert status == 400
    assert doc["code"] == "invalid_correction"


def test_put_not_supported(api):
    base, _ = api
    status, doc = request("PUT", f"{base}/v1/ingest", b"{}")
    assert status == 405
    assert doc["code"] == "method_not_allowed"


def test_unknown_route_404(api):
    base, _ = api
    status, doc = request("GET", f"{base}/v1/espionage")
    assert status == 404
    assert doc["code"] == "not_found"


def test_restart_preserves_responses(
    api, tmp_path, gazetteer, relevance_clf, domain_clf, sentiment_clf
):
    base, service = api
    ingest(base)
    body = json.dumps(
        {"headline_id": "h2", "stage": "Sentiment", "new_label": "neutral",
         "author": "reviewer"}
    ).encode()
    request("POST", f"{base}/v1/corrections", body)
    _, before = request("GET", f"{base}/v1/companies/TestCorp/score")

    # Abrupt restart: new service over the same store, no flush in between.
    restarted = MinerService(
        service.store_dir, gazetteer, relevance_clf, domain_clf, sentiment_clf
    )
    server, thread = serve_in_thread(restarted)
    try:
        host, port = server.server_address[:2]
        _, after = request("GET", f"http://{host}:{port}/v1/companies/TestCorp/score")
        assert after == before
    finally:
        server.shutdown()
        thread.join(timeout=5)
