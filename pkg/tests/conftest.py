from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (title, list of outcomes)
_ACCEPTANCE: dict[int, tuple[str, list[bool]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number, title = marker.args
        _ACCEPTANCE.setdefault(number, (title, []))[1].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, results = _ACCEPTANCE[number]
        status = "PASS" if results and all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}: {title}")


def oai_page(records, token=None, complete=None):
    """Render a ListRecords page for ``records`` = [(identifier, datestamp), ...]."""
    items = []
    for identifier, stamp in records:
        items.append(
            f"""<record><header><identifier>{identifier}</identifier><datestamp>{stamp}</datestamp></header>
<metadata><oai_dc:dc xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc/"
 xmlns:dc="http://purl.org/dc/elements/1.1/"><dc:title>Title of {identifier}</dc:title></oai_dc:dc></metadata></record>"""
        )
    tok = f"<resumptionToken>{token}</resumptionToken>" if token else "<resumptionToken/>"
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/"><responseDate>2019-03-07T00:00:00Z</responseDate>'
        f"<ListRecords>{''.join(items)}{tok}</ListRecords></OAI-PMH>"
    ).encode()


def oai_error(code):
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/"><error code="{code}">{code}</error></OAI-PMH>'
    ).encode()


class FixtureOAI:
    """A local OAI-PMH endpoint serving ``pages`` in order via resumption tokens.

    ``faults`` maps a page index to a number of HTTP 500 responses to send
    before serving it. ``bad_tokens`` maps a page index to how many times its
    token is answered with ``badResumptionToken``.
    """

    def __init__(self, pages, faults=None, bad_tokens=None):
        self.pages = pages
        self.faults = dict(faults or {})
        self.bad_tokens = dict(bad_tokens or {})
        self.requests: list[dict] = []
        fixture = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                query = {k: v[0] for k, v in parse_qs(urlparse(self.path).query).items()}
                fixture.requests.append(query)
                token = query.get("resumptionToken")
                idx = int(token[1:]) if token else 0
                if fixture.faults.get(idx, 0) > 0:
                    fixture.faults[idx] -= 1
                    self.send_response(500)
                    self.end_headers()
                    return
                if token and fixture.bad_tokens.get(idx, 0) > 0:
                    fixture.bad_tokens[idx] -= 1
                    body = oai_error("badResumptionToken")
                else:
                    nxt = f"p{idx + 1}" if idx + 1 < len(fixture.pages) else None
                    body = oai_page(fixture.pages[idx], nxt)
                self.send_response(200)
                self.send_header("Content-Type", "text/xml")
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server.server_address[1]}/oai"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


def three_pages():
    return [
        [(f"oai:fixture:{p * 5 + i}", f"2018-0{p + 1}-{10 + i}T08:00:00Z") for i in range(5)] for p in range(3)
    ]


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def link_corpus(corpus, jobs=1):
    """Run filtering and linkage over an in-memory synthetic corpus."""
    from depositlag.linkage import filter_registry, filter_repository, link
    from depositlag.model import RepositoryInfo

    repos = {r["repo_id"]: RepositoryInfo.from_json(r) for r in corpus.repositories}
    registry, reg_rej = filter_registry(corpus.registry)
    repository, repo_rej = filter_repository(corpus.repository, repos)
    return registry, repository, link(registry, repository, jobs=jobs), reg_rej + repo_rej
