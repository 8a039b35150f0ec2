"""
Tests for the three-party protocol: TTP, enrollment, two-step verification,
sessions, the server store and the channel.
"""

import threading
from dataclasses import replace

import numpy as np
import pytest

from otbmorph.errors import (
    ADReuseError,
    ConfigurationError,
    EnrollmentUnavailableError,
    ParseError,
    ProtocolStateError,
    ProtocolViolationError,
)
from otbmorph.evaluation import CalibrationSettings, calibrate
from otbmorph.evaluation.metrics import eer_point
from otbmorph.features import (
    SyntheticExtractor,
    SyntheticWorldConfig,
    build_world,
    dissimilarity,
    sample_presentation,
)
from otbmorph.morph import MorphParams
from otbmorph.protocol import (
    Channel,
    ClientDevice,
    HistoryEvent,
    ProtocolServer,
    SecureElementState,
    ServerStore,
    commit_rotation,
    decide,
    enroll,
    provision_client,
    run_session,
    ttp_issue,
    ttp_replenish,
    verify_step1,
    verify_step2,
)
from otbmorph.tools.seeds import SeedTree
from otbmorph.tools.types import Behavior, Decision, Scenario
from otbmorph.transforms import ADLedger, KeyIssuer

ALWAYS_ACCEPT = 10.0
ALWAYS_REJECT = 0.0
CLIENT = "client-0"


def make_client(world, extractor, threshold, pool=4, seed=0, rotation=True, channel=None):
    """An enrolled client with a server; returns (server, client, rng)."""
    rng = np.random.default_rng(seed)
    ledger = ADLedger()
    issuer = KeyIssuer(world, ledger)
    se_state = provision_client(CLIENT, pool, rng, issuer)
    server = ProtocolServer(
        extractor, threshold, ledger=ledger, channel=channel, rotation_enabled=rotation
    )
    subject = world.subject(0)
    se_state = server.enroll_client(se_state, sample_presentation(subject, rng))
    return server, ClientDevice(CLIENT, subject, se_state), rng


class TestTTP:
    """Tests for pseudonym issuance."""

    def test_issue_unique(self, world, rng):
        ledger = ADLedger()
        pseudonyms = ttp_issue(CLIENT, 30, rng, KeyIssuer(world, ledger))
        assert len({p.pseudonym_id for p in pseudonyms}) == 30
        assert len({p.ad.ad_id for p in pseudonyms}) == 30
        assert all(p.pseudonym_id.startswith("psn-") for p in pseudonyms)
        assert all(p.issued_to == CLIENT and not p.consumed for p in pseudonyms)
        assert len(ledger) == 30

    def test_issue_requires_positive_count(self, world, rng):
        with pytest.raises(ConfigurationError):
            ttp_issue(CLIENT, 0, rng, KeyIssuer(world, ADLedger()))

    def test_replenish(self, world, rng):
        issuer = KeyIssuer(world, ADLedger())
        se_state = provision_client(CLIENT, 2, rng, issuer)
        assert se_state.current_ad is None
        assert ttp_replenish(se_state, 3, rng, issuer).pool_size == 5

    def test_foreign_pseudonym_rejected(self, world, rng):
        pseudonyms = ttp_issue("client-9", 1, rng, KeyIssuer(world, ADLedger()))
        with pytest.raises(ProtocolStateError):
            SecureElementState(CLIENT, None, tuple(pseudonyms))


class TestEnrollment:
    """Tests for enroll."""

    def test_enroll_consumes_a_pseudonym(self, world, extractor, rng):
        se_state = provision_client(CLIENT, 2, rng, KeyIssuer(world, ADLedger()))
        head = se_state.pseudonym_pool[0]
        record, updated = enroll(
            se_state, sample_presentation(world.subject(0), rng), MorphParams(), extractor, 0.9
        )
        assert updated.pool_size == 1
        assert updated.current_ad is head.ad
        assert record.client_ref.ad_id == head.ad.ad_id
        assert record.client_ref.scenario is Scenario.OTB_MORPH
        assert record.history[0].session_id == 0

    def test_enroll_with_empty_pool(self, world, extractor, rng):
        se_state = provision_client(CLIENT, 1, rng, KeyIssuer(world, ADLedger()))
        presentation = sample_presentation(world.subject(0), rng)
        _, updated = enroll(se_state, presentation, MorphParams(), extractor, 0.9)
        with pytest.raises(EnrollmentUnavailableError):
            enroll(updated, presentation, MorphParams(), extractor, 0.9)


class TestTwoStepVerification:
    """Tests for verify_step1 and verify_step2."""

    def test_step1_is_side_effect_free(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        record = server.store.get(CLIENT)
        result = verify_step1(sample_presentation(client.subject, rng), record, client.se_state, extractor)
        assert result.decision is Decision.ACCEPT
        assert result.probe.ad_id == client.se_state.current_ad.ad_id
        assert server.store.get(CLIENT) is record

    def test_step1_without_current_ad(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        bare = replace(client.se_state, current_ad=None)
        with pytest.raises(ProtocolStateError):
            verify_step1(sample_presentation(client.subject, rng), server.store.get(CLIENT), bare, extractor)

    def test_step2_after_reject(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        with pytest.raises(ProtocolViolationError):
            verify_step2(
                sample_presentation(client.subject, rng),
                server.store.get(CLIENT),
                client.se_state,
                extractor,
                after=Decision.REJECT,
                session_id=1,
            )

    def test_step2_rotates_without_retiring(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        old_ad = client.se_state.current_ad
        before = server.store.get(CLIENT)
        record, se_state = verify_step2(
            sample_presentation(client.subject, rng),
            before,
            client.se_state,
            extractor,
            after=Decision.ACCEPT,
            session_id=1,
            ledger=server.ledger,
        )
        assert se_state.current_ad.ad_id != old_ad.ad_id
        assert record.client_ref.ad_id == se_state.current_ad.ad_id
        assert record.history[-1].rotated
        assert record.history[-1].previous_ad_id == old_ad.ad_id
        server.ledger.check_active(old_ad.ad_id)
        assert server.store.get(CLIENT) is before

        commit_rotation(server.store, before, record, server.ledger)
        assert server.store.get(CLIENT) is record
        with pytest.raises(ADReuseError):
            server.ledger.check_active(old_ad.ad_id)

    def test_failed_commit_keeps_previous_ad_active(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        old_ad = client.se_state.current_ad
        before = server.store.get(CLIENT)
        record, _ = verify_step2(
            sample_presentation(client.subject, rng),
            before,
            client.se_state,
            extractor,
            after=Decision.ACCEPT,
            session_id=1,
            ledger=server.ledger,
        )
        concurrent = before.append(HistoryEvent(1, Decision.REJECT, False, old_ad.ad_id))
        server.store.swap(before, concurrent)
        with pytest.raises(ProtocolStateError):
            commit_rotation(server.store, before, record, server.ledger)
        assert server.store.get(CLIENT) is concurrent
        server.ledger.check_active(old_ad.ad_id)

    def test_decide_is_strict(self):
        assert decide(0.5, 0.5) is Decision.REJECT
        assert decide(0.4999, 0.5) is Decision.ACCEPT


class TestSessions:
    """Tests for run_session."""

    def test_accept_rotates(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        before = client.se_state
        transcript = run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        assert transcript.decision is Decision.ACCEPT
        assert transcript.rotated
        assert transcript.session_id == 1
        assert [m.type for m in transcript.messages] == [
            "request", "challenge", "template", "decision", "reenroll", "ack",
        ]
        assert client.se_state.pool_size == before.pool_size - 1
        assert server.store.get(CLIENT).client_ref.ad_id == client.se_state.current_ad.ad_id

    def test_reject_changes_nothing(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_REJECT)
        record, se_state = server.store.get(CLIENT), client.se_state
        transcript = run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        assert transcript.decision is Decision.REJECT
        assert not transcript.rotated
        assert [m.type for m in transcript.messages] == ["request", "challenge", "template", "decision"]
        assert server.store.get(CLIENT) is record
        assert client.se_state is se_state

    def test_next_session_uses_rotated_ad(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        issued = client.se_state.current_ad.ad_id
        second = run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        assert second.ad_id == issued
        assert second.session_id == 2
        history = server.store.get(CLIENT).history
        assert [e.session_id for e in history] == [0, 1, 2]

    def test_rotation_disabled(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT, rotation=False)
        reference = server.store.get(CLIENT).client_ref
        transcript = run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        assert transcript.decision is Decision.ACCEPT
        assert not transcript.rotated
        assert server.store.get(CLIENT).client_ref is reference
        assert server.store.get(CLIENT).history[-1].session_id == 1

    def test_pool_exhaustion_keeps_accept(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT, pool=1)
        reference = server.store.get(CLIENT).client_ref
        transcript = run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        assert transcript.decision is Decision.ACCEPT
        assert not transcript.rotated
        assert transcript.error == "pool-exhausted"
        assert server.store.get(CLIENT).client_ref is reference

    def test_replenished_pool_resumes_rotation(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT, pool=2)
        assert run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng).rotated
        assert client.se_state.pool_size == 0
        assert run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng).error == "pool-exhausted"

        client.se_state = ttp_replenish(client.se_state, 2, rng, KeyIssuer(world, server.ledger))
        fresh = client.se_state.pseudonym_pool[0].ad.ad_id
        transcript = run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        assert transcript.rotated
        assert client.se_state.current_ad.ad_id == fresh
        assert client.se_state.pool_size == 1
        assert server.store.get(CLIENT).client_ref.ad_id == fresh

    def test_attacker_needs_presenter(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        with pytest.raises(ConfigurationError):
            run_session(client, server, Behavior.ATTACKER, Scenario.OTB_MORPH, rng)

    def test_attacker_session(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_REJECT)
        transcript = run_session(
            client, server, Behavior.ATTACKER, Scenario.OTB_MORPH, rng, presenter=world.subject(5)
        )
        assert transcript.behavior is Behavior.ATTACKER
        assert transcript.decision is Decision.REJECT

    def test_only_one_time_morph_sessions(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        with pytest.raises(ConfigurationError):
            run_session(client, server, Behavior.GENUINE, Scenario.GAUSSIAN, rng)

    def test_failure_attaches_transcript(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        client.se_state = replace(client.se_state, current_ad=None)
        with pytest.raises(ProtocolStateError) as info:
            run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        transcript = info.value.transcript
        assert transcript.error == "protocol-state"
        assert transcript.decision is None
        assert [m.type for m in transcript.messages] == ["request", "challenge"]

    def test_transcript_record(self, world, extractor):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        record = run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng).to_dict()
        assert record["decision"] == "accept"
        assert record["behavior"] == "genuine"
        assert record["messages"][0]["from"] == CLIENT
        assert record["messages"][3]["score"] == record["score"]
        assert [m["seq"] for m in record["messages"]] == list(range(6))

    def test_stale_template_replay_fails(self, world, extractor, otb_threshold):
        """A template captured before a rotation no longer matches the new reference."""
        rejected = 0
        for seed in range(5):
            channel = Channel()
            captured = []
            channel.add_tap(lambda m, t: captured.append(t) if m.type == "template" else None)
            server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT, seed=seed, channel=channel)
            run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
            stale = captured[0]
            score = dissimilarity(stale.embedding, server.store.get(CLIENT).client_ref.embedding)
            if decide(score, otb_threshold) is Decision.REJECT:
                rejected += 1
        assert rejected >= 4


class TestChannel:
    """Tests for channel taps."""

    def test_taps_see_every_message(self, world, extractor):
        channel = Channel()
        seen = []

        def tap(message, template):
            seen.append((message.type, template is not None))

        channel.add_tap(tap)
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT, channel=channel)
        run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        assert seen == [
            ("request", False),
            ("challenge", False),
            ("template", True),
            ("decision", False),
            ("reenroll", True),
            ("ack", False),
        ]
        channel.remove_tap(tap)
        run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        assert len(seen) == 6


class TestServerStore:
    """Tests for ServerStore persistence."""

    def test_save_load_exact(self, world, extractor, tmp_path):
        server, client, rng = make_client(world, extractor, ALWAYS_ACCEPT)
        run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
        path = server.store.save(tmp_path / "store.json")
        loaded = ServerStore.load(path)
        original, restored = server.store.get(CLIENT), loaded.get(CLIENT)
        assert np.array_equal(original.client_ref.embedding.values, restored.client_ref.embedding.values)
        assert restored.history == original.history
        assert float(restored.threshold) == float(original.threshold)
        assert loaded.to_dict() == server.store.to_dict()

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ServerStore.load(tmp_path / "missing.json")

    def test_wrong_schema(self, tmp_path):
        path = tmp_path / "store.json"
        path.write_text('{"schema": "other/1", "clients": {}}')
        with pytest.raises(ParseError):
            ServerStore.load(path)

    def test_unknown_client(self):
        with pytest.raises(ProtocolStateError):
            ServerStore().get("nobody")

    def test_swap_commits_once_per_read(self, world, extractor):
        """Of many writers holding the same record, exactly one commits."""
        server, _, _ = make_client(world, extractor, ALWAYS_ACCEPT)
        before = server.store.get(CLIENT)
        outcomes = []
        lock = threading.Lock()

        def attempt(n):
            updated = before.append(HistoryEvent(1, Decision.REJECT, False, f"ad-{n}"))
            try:
                server.store.swap(before, updated)
                result = "ok"
            except ProtocolStateError:
                result = "stale"
            with lock:
                outcomes.append(result)

        threads = [threading.Thread(target=attempt, args=(n,)) for n in range(12)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert outcomes.count("ok") == 1
        assert len(server.store.get(CLIENT).history) == 2

    def test_swap_rejects_foreign_record(self, world, extractor):
        server, _, _ = make_client(world, extractor, ALWAYS_ACCEPT)
        before = server.store.get(CLIENT)
        with pytest.raises(ProtocolStateError):
            server.store.swap(before, replace(before, client_id="client-9"))


@pytest.fixture(scope="module")
def full_world():
    return build_world(SyntheticWorldConfig(n_subjects=20, rng_seed=7))


class TestLongRuns:
    """Protocol behaviour over many sessions."""

    @pytest.mark.slow
    def test_genuine_sessions_are_accepted(self, full_world):
        extractor = SyntheticExtractor.for_world(full_world)
        calibration = calibrate(
            full_world,
            [Scenario.OTB_MORPH],
            CalibrationSettings(genuine_trials=200, impostor_trials=200),
            SeedTree(21),
            extractor=extractor,
        )
        threshold = eer_point(calibration.score_sets[Scenario.OTB_MORPH]).threshold
        rng = np.random.default_rng(5)
        ledger = ADLedger()
        issuer = KeyIssuer(full_world, ledger)
        server = ProtocolServer(extractor, threshold, ledger=ledger)
        clients = []
        for n in range(20):
            client_id = f"client-{n}"
            subject = full_world.subject(n)
            se_state = provision_client(client_id, 26, rng, issuer)
            se_state = server.enroll_client(se_state, sample_presentation(subject, rng))
            clients.append(ClientDevice(client_id, subject, se_state))

        accepts = 0
        for _ in range(25):
            for client in clients:
                before = server.store.get(client.client_id).client_ref.ad_id
                transcript = run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
                after = server.store.get(client.client_id).client_ref.ad_id
                if transcript.decision is Decision.ACCEPT:
                    accepts += 1
                    assert transcript.rotated
                    assert after != before
                    assert after == client.se_state.current_ad.ad_id
                else:
                    assert after == before
        assert accepts / 500 >= 0.95

    @pytest.mark.slow
    def test_every_ad_is_used_once(self, world, extractor):
        rng = np.random.default_rng(8)
        ledger = ADLedger()
        issuer = KeyIssuer(world, ledger)
        server = ProtocolServer(extractor, ALWAYS_ACCEPT, ledger=ledger)
        clients = []
        for n in range(4):
            client_id = f"client-{n}"
            se_state = provision_client(client_id, 251, rng, issuer)
            se_state = server.enroll_client(se_state, sample_presentation(world.subject(n), rng))
            clients.append(ClientDevice(client_id, world.subject(n), se_state))

        for _ in range(250):
            for client in clients:
                assert run_session(client, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng).rotated

        replaced = []
        for client in clients:
            history = server.store.get(client.client_id).history
            rotations = [e for e in history if e.rotated]
            assert len(rotations) == 250
            replaced.extend(e.previous_ad_id for e in rotations)
            for event in rotations:
                with pytest.raises(ADReuseError):
                    ledger.check_active(event.previous_ad_id)
            ledger.check_active(client.se_state.current_ad.ad_id)
        assert len(replaced) == len(set(replaced)) == 1000
        assert ledger.retired_count == 1000
