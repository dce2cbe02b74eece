from __future__ import annotations

import json

import pytest

from charter.agents import (
    AgentResponse,
    ContextOverflow,
    IntentSpec,
    ParseError,
    Role,
    RoleKind,
    SynthesisFailure,
    Verdict,
    build_prompt,
    estimate_tokens,
    format_response,
    parse_response,
    synthesize_contract,
)
from charter.backends import ScriptedBackend
from charter.contract import ActionOp, SectionKey, render
from charter.kernel import ViolationKind, print_api_section, project, validate
from charter.tasks import Task, TaskStatus

from conftest import contract_with, make_entry, method, simple_class

INTENT = IntentSpec("Build a small grid game.")


def _contract():
    entry = make_entry(
        "core/engine.py",
        classes=(simple_class("Engine", [("ticks", "int")], [method("def tick() -> None")]),),
    )
    return contract_with([entry])


def test_worker_bundle_contains_contract_and_no_file_bodies():
    contract = _contract()
    task = Task(id="core/engine.py", file_path="core/engine.py", owner="dev")
    secret_body = "class Engine:\n    SECRET_CONSTANT = 42\n"
    bundle = build_prompt(Role(RoleKind.WORKER, owner="dev"), task, contract, INTENT)
    assert render(contract) in bundle.text
    assert "SECRET_CONSTANT" not in bundle.text
    assert secret_body not in bundle.text


def test_worker_bundle_includes_feedback():
    contract = _contract()
    task = Task(id="core/engine.py", file_path="core/engine.py", owner="dev")
    task.feedback.append("Fix the schema definition; Engine requires ticks")
    bundle = build_prompt(Role(RoleKind.WORKER, owner="dev"), task, contract, INTENT)
    assert "Fix the schema definition; Engine requires ticks" in bundle.text


def test_critic_bundle_contains_implementation():
    contract = _contract()
    task = Task(id="core/engine.py", file_path="core/engine.py", owner="dev", status=TaskStatus.DONE)
    body = "class Engine:\n    def tick(self) -> None:\n        pass\n"
    bundle = build_prompt(Role(RoleKind.CRITIC), task, contract, INTENT, implementation=body)
    assert body in bundle.text


def test_contractless_bundle_replaces_document_with_paths():
    contract = _contract()
    task = Task(id="core/engine.py", file_path="core/engine.py", owner="dev")
    bundle = build_prompt(
        Role(RoleKind.WORKER, owner="dev"),
        task,
        contract,
        INTENT,
        include_contract=False,
        task_paths=("core/engine.py", "main.py"),
    )
    assert "Shared document:" not in bundle.text
    assert "- core/engine.py" in bundle.text and "- main.py" in bundle.text


def test_context_overflow():
    contract = _contract()
    task = Task(id="core/engine.py", file_path="core/engine.py", owner="dev")
    with pytest.raises(ContextOverflow):
        build_prompt(Role(RoleKind.WORKER, owner="dev"), task, contract, INTENT, context_limit=50)


def test_worker_role_requires_owner():
    with pytest.raises(ValueError):
        Role(RoleKind.WORKER)


def test_token_estimator_rounds_up():
    assert estimate_tokens("") == 0
    assert estimate_tokens("abcd") == 1
    assert estimate_tokens("abcde") == 2


def test_parse_response_update_add_action():
    raw = (
        "<thinking>\nplan\n</thinking>\n\n<output>\ndone\n</output>\n\n"
        '<document_action>\n[{"type": "update|add", "section": "Constraints", "content": "- fast"}]\n'
        "</document_action>"
    )
    response = parse_response(raw)
    assert len(response.actions) == 1
    action = response.actions[0]
    assert action.op is ActionOp.UPDATE
    assert action.section is SectionKey.CONSTRAINTS
    assert action.content == "- fast"


def test_parse_response_content_object_fans_out():
    payload = json.dumps([
        {"type": "update", "content": {"Constraints": "- a", "Project Overview": "overview"}}
    ])
    raw = f"<thinking>\nt\n</thinking>\n<output>\no\n</output>\n<document_action>\n{payload}\n</document_action>"
    response = parse_response(raw)
    sections = {a.section for a in response.actions}
    assert sections == {SectionKey.CONSTRAINTS, SectionKey.PROJECT_OVERVIEW}


def test_parse_response_missing_output_block():
    with pytest.raises(ParseError, match="output"):
        parse_response("<thinking>\nonly thinking\n</thinking>")


def test_parse_response_clobber_guard():
    payload = json.dumps(
        [{"type": "update", "section": "Symbolic API Specifications", "content": "* **Status:** DONE"}]
    )
    raw = f"<thinking>\nt\n</thinking>\n<output>\no\n</output>\n<document_action>\n{payload}\n</document_action>"
    with pytest.raises(ParseError, match="clobber"):
        parse_response(raw)


def test_parse_response_artifacts_and_verdict():
    raw = (
        "<thinking>\nt\n</thinking>\n"
        "<output>\nlooks right\nVERDICT: FAIL collision uses undeclared width\n</output>\n"
        "```python\n# FILE: core/engine.py\nclass Engine:\n    pass\n```"
    )
    response = parse_response(raw)
    assert response.artifacts == (("core/engine.py", "class Engine:\n    pass\n"),)
    assert response.verdict == Verdict(passed=False, reason="collision uses undeclared width")


@pytest.mark.parametrize(
    "response",
    [
        AgentResponse(thinking="t", output="o"),
        AgentResponse(
            thinking="multi\nline",
            output="summary\nVERDICT: PASS",
            verdict=Verdict(passed=True),
        ),
        AgentResponse(
            thinking="t",
            output="o",
            actions=(
                # round-trip uses the display title in the wire format
                __import__("charter").contract.ContractAction(
                    ActionOp.ADD, SectionKey.USER_STORIES, "- story"
                ),
            ),
            artifacts=(("a/b.py", "print(1)\n"),),
        ),
    ],
)
def test_format_parse_round_trip(response):
    assert parse_response(format_response(response)) == response


def _synthesis_backend(records):
    return ScriptedBackend(records)


def _pm_record(actions, task=""):
    response = AgentResponse(thinking="plan", output="planned", actions=tuple(actions))
    return {"layer": 0, "role": "project_manager", "task": task, "response": format_response(response)}


def _disc_record(actions=()):
    response = AgentResponse(thinking="check", output="checked", actions=tuple(actions))
    return {"layer": 0, "role": "discriminator", "task": "", "response": format_response(response)}


def test_synthesize_contract_from_fixture(gomoku_transcript):
    backend = ScriptedBackend.from_file(gomoku_transcript)
    contract = synthesize_contract(IntentSpec("Write a Gomoku program with AI."), backend)
    kernel = project(contract)
    assert len(kernel.entries) >= 3
    assert not any(v.kind is ViolationKind.CYCLE for v in validate(kernel))


def test_synthesize_rejects_cyclic_draft_then_discriminator_repairs():
    from charter.contract import ContractAction

    mk = lambda p, c: make_entry(p, classes=(simple_class(c, [], [method("def f() -> None")]),))
    api = ContractAction(
        ActionOp.UPDATE,
        SectionKey.API_SPECIFICATIONS,
        "\n".join(print_api_section([mk("a.py", "A"), mk("b.py", "B")])),
    )
    cyclic = ContractAction(
        ActionOp.UPDATE, SectionKey.DEPENDENCY_RELATIONSHIPS, "a.py --> b.py\nb.py --> a.py"
    )
    fixed = ContractAction(ActionOp.UPDATE, SectionKey.DEPENDENCY_RELATIONSHIPS, "a.py --> b.py")
    backend = _synthesis_backend([_pm_record([api, cyclic]), _disc_record([fixed])])
    contract = synthesize_contract(IntentSpec("two modules"), backend)
    kernel = project(contract)
    assert kernel.dependencies["a.py"] == ("b.py",)
    assert not any(v.kind is ViolationKind.CYCLE for v in validate(kernel))


def test_synthesize_fails_without_actions():
    backend = _synthesis_backend([_pm_record([]), _disc_record()])
    with pytest.raises(SynthesisFailure, match="no document actions"):
        synthesize_contract(IntentSpec("anything"), backend)


def test_synthesize_fails_without_api_content():
    from charter.contract import ContractAction

    overview = ContractAction(ActionOp.UPDATE, SectionKey.PROJECT_OVERVIEW, "words")
    backend = _synthesis_backend([_pm_record([overview]), _disc_record()])
    with pytest.raises(SynthesisFailure, match="Symbolic API Specifications"):
        synthesize_contract(IntentSpec("anything"), backend)


def test_synthesis_is_exactly_two_role_phases(gomoku_transcript):
    calls = []

    class Spy:
        def __init__(self, inner):
            self.inner = inner

        def complete(self, request):
            calls.append((request.layer, request.role))
            return self.inner.complete(request)

    backend = Spy(ScriptedBackend.from_file(gomoku_transcript))
    synthesize_contract(IntentSpec("Write a Gomoku program with AI."), backend)
    assert calls == [(0, "project_manager"), (0, "discriminator")]


def test_synthesized_gomoku_contract_populates_all_sections(gomoku_transcript):
    from charter.contract import SectionKey

    backend = ScriptedBackend.from_file(gomoku_transcript)
    contract = synthesize_contract(IntentSpec("Write a Gomoku program with AI."), backend)
    for key in SectionKey:
        assert contract.body(key), f"{key.value} left empty"
