import json
import socket
import time

from fastapi.testclient import TestClient

from alphasoft.dsp import Calibration
from alphasoft.mapping import to_duty
from alphasoft.orchestrator import RunConfig
from alphasoft.service import BciService, NdjsonTcpServer, create_app
from alphasoft.sources import Eyes, ScenarioSegment

CAL = Calibration(p_ref=35.0, threshold=5.0)


def base_config(**kw):
    defaults = dict(embodiment="character", seed=0, calibration=CAL,
                    scenario=(ScenarioSegment(Eyes.OPEN, 600.0),))
    defaults.update(kw)
    return RunConfig(**defaults)


def make_service(tmp_path, time_scale=50.0, **kw):
    return BciService(base_config(**kw), out_root=tmp_path, time_scale=time_scale)


def recv_until(ws, want_type, timeout=10.0, predicate=None):
    """Read interleaved WS messages until one matches."""
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        msg = json.loads(ws.receive_text())
        if msg.get("type") == want_type and (predicate is None or predicate(msg)):
            return msg
    raise AssertionError(f"no {want_type!r} message within {timeout} s")


def wait_for(condition, timeout=10.0, interval=0.01):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if condition():
            return True
        time.sleep(interval)
    return False


class TestHttpEndpoints:
    def test_health_and_config(self, tmp_path):
        service = make_service(tmp_path)
        with TestClient(create_app(service)) as client:
            health = client.get("/health").json()
            assert health == {"status": "ok", "run_active": False}
            config = client.get("/config").json()
            assert config["embodiment"] == "character"
            assert config["mapping"]["alpha_gain"] == 2.55
            assert config["seed"] == 0


class TestIdleStream:
    def test_idle_snapshots_have_idle_phase(self, tmp_path):
        service = make_service(tmp_path)
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/ws") as ws:
                for _ in range(3):
                    snap = recv_until(ws, "snapshot")
                    assert snap["run_active"] is False
                    assert snap["flower"]["phase"] == "idle"

    def test_commands_rejected_without_run(self, tmp_path):
        service = make_service(tmp_path)
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps({"type": "set_eyes", "eyes": "closed"}))
                reply = recv_until(ws, "rejected")
                assert "no active run" in reply["reason"]


class TestSnapshotCadence:
    def test_twenty_snapshots_per_simulated_second(self, tmp_path):
        # subscribe directly at the hub: no transport drops, sim-exact cadence
        service = make_service(tmp_path, time_scale=200.0)
        seen = []
        service.hub.subscribe(lambda s: seen.append(s))
        reply = service.apply_command({"type": "start",
                                       "config": {"duration_s": 4.0}})
        assert reply["type"] == "ack"
        assert service.session.finished.wait(20.0)
        live = [s for s in seen if s.get("run_active")]
        in_window = [s for s in live if 1.0 <= s["t_s"] < 2.0]
        assert 19 <= len(in_window) <= 21
        t_values = [s["t_s"] for s in live]
        assert t_values == sorted(t_values)  # monotonically increasing

    def test_two_subscribers_see_identical_streams(self, tmp_path):
        service = make_service(tmp_path, time_scale=200.0)
        a, b = [], []
        service.hub.subscribe(lambda s: a.append(s))
        service.hub.subscribe(lambda s: b.append(s))
        service.apply_command({"type": "start", "config": {"duration_s": 3.0}})
        assert service.session.finished.wait(20.0)
        assert a == b


class TestRunLifecycle:
    def test_start_stream_stop(self, tmp_path):
        service = make_service(tmp_path)
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps(
                    {"type": "start", "config": {"duration_s": 30.0}}))
                ack = recv_until(ws, "ack")
                assert ack["cmd"] == "start" and ack["run_id"] == 1
                snap = recv_until(ws, "snapshot",
                                  predicate=lambda s: s["run_active"])
                assert snap["run_id"] == 1
                ws.send_text(json.dumps({"type": "start", "config": {}}))
                assert recv_until(ws, "rejected")["reason"] == \
                    "a run is already active"
                ws.send_text(json.dumps({"type": "stop"}))
                recv_until(ws, "ack", predicate=lambda m: m["cmd"] == "stop")
            assert wait_for(lambda: not service.run_active())
            assert (tmp_path / "run_001" / "report.json").exists()

    def test_run_finishes_by_itself(self, tmp_path):
        service = make_service(tmp_path, time_scale=100.0)
        service.start()
        try:
            service.apply_command({"type": "start", "config": {"duration_s": 3.0}})
            assert service.session.finished.wait(15.0)
            report = json.loads(
                (tmp_path / "run_001" / "report.json").read_text())
            assert report["duration_s"] == 3.0
        finally:
            service.shutdown()

    def test_reset_clears_session(self, tmp_path):
        service = make_service(tmp_path, time_scale=100.0)
        service.apply_command({"type": "start", "config": {"duration_s": 30.0}})
        assert service.run_active()
        service.apply_command({"type": "reset"})
        assert wait_for(lambda: service.session is None)


class TestSteering:
    def test_set_eyes_raises_alpha_within_two_windows(self, tmp_path):
        service = make_service(tmp_path, time_scale=40.0)
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps(
                    {"type": "start", "config": {"duration_s": 20.0}}))
                recv_until(ws, "ack")
                # wait for the pipeline to produce a (low) eyes-open reading
                snap = recv_until(ws, "snapshot",
                                  predicate=lambda s: s.get("a_psd") is not None)
                assert snap["a_psd"] <= 5.0
                ws.send_text(json.dumps({"type": "set_eyes", "eyes": "closed"}))
                ack = recv_until(ws, "ack")
                t_cmd = None
                deadline = time.monotonic() + 20.0
                while time.monotonic() < deadline:
                    snap = recv_until(ws, "snapshot")
                    if t_cmd is None and snap["run_active"]:
                        t_cmd = snap["t_s"]
                    if snap.get("a_psd", 0) and snap["a_psd"] > 5.0:
                        # within two 1 s window emissions plus a boundary tick
                        assert snap["t_s"] - t_cmd <= 2.5
                        assert snap["eyes"] == "closed"
                        return
                raise AssertionError("a_psd never rose after set_eyes")

    def test_override_alpha_dominates_commands(self, tmp_path):
        service = make_service(tmp_path, time_scale=40.0)
        with TestClient(create_app(service)) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps(
                    {"type": "start", "config": {"duration_s": 20.0}}))
                recv_until(ws, "ack")
                ws.send_text(json.dumps({"type": "override_alpha", "value": 57}))
                recv_until(ws, "ack")
                expected = to_duty(57).duty
                snap = recv_until(
                    ws, "snapshot", timeout=20.0,
                    predicate=lambda s: (s.get("character") or {}).get("duty"))
                # once the first post-override command lands, duty follows it
                seen_expected = False
                deadline = time.monotonic() + 20.0
                while time.monotonic() < deadline:
                    duty = (snap.get("character") or {}).get("duty", 0)
                    if duty:
                        assert duty == expected
                        seen_expected = True
                    if snap["t_s"] > 8.0:
                        break
                    snap = recv_until(ws, "snapshot")
                assert seen_expected

    def test_clear_override_restores_pipeline(self, tmp_path):
        service = make_service(tmp_path, time_scale=100.0)
        service.apply_command({"type": "start", "config": {"duration_s": 10.0}})
        assert service.apply_command(
            {"type": "override_alpha", "value": 80})["type"] == "ack"
        assert service.apply_command(
            {"type": "clear_override"})["type"] == "ack"
        assert service.session.finished.wait(15.0)
        # eyes stayed open throughout: after the override clears, commands
        # return to the pipeline's own (zero) readings
        lines = (tmp_path / "run_001" / "character_commands.csv") \
            .read_text().splitlines()[1:]
        assert lines[-1].split(",")[2] == "0"

    def test_set_param_ack_and_rejection(self, tmp_path):
        service = make_service(tmp_path, time_scale=100.0)
        service.apply_command({"type": "start", "config": {"duration_s": 8.0}})
        assert service.apply_command(
            {"type": "set_param", "name": "alpha_gain", "value": 2.55}
        )["type"] == "ack"
        reply = service.apply_command(
            {"type": "set_param", "name": "beta_gain", "value": -1})
        assert reply["type"] == "rejected"
        assert "p_min < p_max" in reply["reason"]
        reply = service.apply_command(
            {"type": "set_param", "name": "bogus", "value": 1})
        assert reply["type"] == "rejected"
        assert service.apply_command(
            {"type": "set_param", "name": "threshold", "value": 4.0}
        )["type"] == "ack"
        service.apply_command({"type": "stop"})
        service.session.join(10.0)

    def test_set_param_alpha_gain_changes_next_duty(self, tmp_path):
        service = make_service(tmp_path, time_scale=100.0)
        service.apply_command({"type": "start", "config": {"duration_s": 10.0}})
        service.apply_command({"type": "override_alpha", "value": 100})
        assert service.apply_command(
            {"type": "set_param", "name": "alpha_gain", "value": 1.0}
        )["type"] == "ack"
        assert service.session.finished.wait(15.0)
        rows = (tmp_path / "run_001" / "character_commands.csv") \
            .read_text().splitlines()[1:]
        # all commands after both edits landed use duty = 1.0 * 100
        late = [r.split(",") for r in rows if float(r.split(",")[0]) >= 4.0]
        assert late and all(r[2] == "100" for r in late)

    def test_set_guard_toggles(self, tmp_path):
        service = make_service(tmp_path, time_scale=100.0,
                               embodiment="flower")
        service.apply_command({"type": "start", "config": {"duration_s": 8.0}})
        assert service.apply_command(
            {"type": "set_guard", "enabled": False})["type"] == "ack"
        assert wait_for(
            lambda: service.session.engine.guard_enabled is False, timeout=5.0)
        reply = service.apply_command({"type": "set_guard", "enabled": "yes"})
        assert reply["type"] == "rejected"
        service.apply_command({"type": "stop"})
        service.session.join(10.0)


class TestNonInterference:
    def run_session(self, tmp_path, name, subscribe):
        service = BciService(base_config(), out_root=tmp_path / name,
                             time_scale=500.0)
        collected = []
        if subscribe:
            service.hub.subscribe(lambda s: collected.append(s))
        service.apply_command({"type": "start", "config": {"duration_s": 6.0}})
        assert service.session.finished.wait(30.0)
        return tmp_path / name / "run_001", collected

    def test_observers_change_no_output_byte(self, tmp_path):
        dir_a, got_a = self.run_session(tmp_path, "with_sub", subscribe=True)
        dir_b, got_b = self.run_session(tmp_path, "without_sub", subscribe=False)
        assert got_a and not got_b
        names = sorted(p.name for p in dir_a.iterdir())
        for name in names:
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name


class TestSnapshotShape:
    def test_snapshot_fields(self, tmp_path):
        service = make_service(tmp_path, time_scale=100.0, embodiment="both")
        seen = []
        service.hub.subscribe(lambda s: seen.append(s))
        service.apply_command({"type": "start", "config": {"duration_s": 4.0}})
        assert service.session.finished.wait(15.0)
        snap = next(s for s in reversed(seen) if s.get("spectrum"))
        assert set(snap["params"]) == {"alpha_gain", "beta_gain", "gamma_gain",
                                       "p_ref", "threshold", "guard"}
        assert len(snap["spectrum"]["psd"]) == 29  # 6..20 Hz inclusive at 0.5 Hz
        assert snap["spectrum"]["f_start_hz"] == 6.0
        assert {"duty", "dance_freq_hz", "amplitude"} <= set(snap["character"])
        assert {"setpoint_kpa", "p_filt_kpa", "valve_open", "phase",
                "remaining_s"} <= set(snap["flower"])


class TestTcpFallback:
    def test_ndjson_stream_and_commands(self, tmp_path):
        service = make_service(tmp_path)
        service.start()
        server = NdjsonTcpServer(service, port=0)
        server.start()
        try:
            with socket.create_connection(("127.0.0.1", server.port),
                                          timeout=5.0) as sock:
                sock.settimeout(5.0)
                reader = sock.makefile("rb")
                snap = json.loads(reader.readline())
                assert snap["type"] == "snapshot"
                sock.sendall(b'{"type": "set_eyes", "eyes": "closed"}\n')
                deadline = time.monotonic() + 5.0
                while time.monotonic() < deadline:
                    msg = json.loads(reader.readline())
                    if msg["type"] == "rejected":
                        assert "no active run" in msg["reason"]
                        break
                else:
                    raise AssertionError("no rejection received over TCP")
                sock.sendall(b'not json\n')
                while True:
                    msg = json.loads(reader.readline())
                    if msg["type"] == "rejected" and "JSON" in msg["reason"]:
                        break
        finally:
            server.shutdown()
            service.shutdown()
