"""Acceptance criteria, one test per criterion; each prints a PASS/FAIL line."""

import pytest

from spiralflow.verify import acceptance_suite

SUITE = acceptance_suite()


@pytest.mark.parametrize("cid,title,check", SUITE, ids=[f"c{c[0]:02d}" for c in SUITE])
def test_criterion(cid, title, check, record_property):
    ok, detail = check()
    line = f"{'PASS' if ok else 'FAIL'} criterion {cid} ({title}): {detail}"
    print("\n" + line)
    record_property("acceptance", line)
    assert ok, detail
