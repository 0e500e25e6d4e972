# Copyright 2026 The ClassLens Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Formative-assessment analytics: ingest, word clouds, grounded insights."""

import json as _json

from . import _core
from ._core import (
    ClassLensError,
    normalize_text,
    normalized_form,
    pseudonym_for,
    question_id_for,
)

__all__ = [
    "ClassLensError",
    "Service",
    "ground_check",
    "layout_cloud",
    "normalize_text",
    "normalized_form",
    "parse_export",
    "pseudonym_for",
    "question_id_for",
    "sample_unique_responses",
    "term_frequencies",
]


def parse_export(csv, salt, manifest=None):
    """Parse a survey export and return the pseudonymized assessment dict."""
    if manifest is not None and not isinstance(manifest, str):
        manifest = _json.dumps(manifest)
    return _json.loads(_core.parse_export(csv, manifest, salt))


def term_frequencies(responses):
    return _json.loads(_core.term_frequencies(list(responses)))


def layout_cloud(terms, seed=0, width=800, height=600):
    """terms: iterable of (term, count) in descending count order."""
    return _json.loads(_core.layout_cloud(list(terms), seed, width, height))


def sample_unique_responses(responses, page_size=5, seed=0, cursor=0):
    return _json.loads(_core.sample_unique_responses(list(responses), page_size, seed, cursor))


def ground_check(report, responses):
    """report: a dict shaped like a model completion (summary, themes, misconceptions, vocabulary)."""
    return _json.loads(_core.ground_check(_json.dumps(report), list(responses)))


class Service:
    """In-process equivalent of the REST service. Methods return (status, body)."""

    def __init__(self, store_root, use_stub=True, fixture_dir=None, salt=None):
        self._svc = _core.Service(str(store_root), use_stub,
                                  None if fixture_dir is None else str(fixture_dir), salt)

    @staticmethod
    def _unpack(text):
        r = _json.loads(text)
        return r["status"], r["body"]

    def ingest(self, csv, manifest=None):
        if manifest is not None and not isinstance(manifest, str):
            manifest = _json.dumps(manifest)
        return self._unpack(self._svc.ingest(csv, manifest))

    def list_assessments(self):
        return self._unpack(self._svc.list_assessments())

    def analytics(self, assessment_id, question_id, section=None, seed=None):
        return self._unpack(self._svc.analytics(assessment_id, question_id, section, seed))

    def samples(self, assessment_id, question_id, section=None, seed=None, cursor=0, page_size=5):
        return self._unpack(
            self._svc.samples(assessment_id, question_id, section, seed, cursor, page_size))

    def insights(self, assessment_id, question_id, **body):
        return self._unpack(self._svc.insights(assessment_id, question_id, _json.dumps(body)))

    def export_report(self, assessment_id, out):
        return self._svc.export_report(assessment_id, str(out))
