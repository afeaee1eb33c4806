"""Live control service: snapshot streaming and operator steering.

One pipeline Engine runs on its own thread, paced to wall clock; it
publishes an immutable snapshot dict every 25 master ticks (20 Hz of
simulated time) into a hub that fans out to any number of subscribers
with latest-wins dropping, so a slow consumer can never backpressure the
control loop. Operator commands are validated on receipt and applied at
the next tick boundary through the engine's command queue.

Transports: WebSocket at /ws (JSON messages each carrying a ``type``
field, snapshots server->client and commands client->server), plus HTTP
GET /health and /config. An optional plain-TCP listener speaks the same
payloads as newline-delimited JSON.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
import queue
import socketserver
import threading
import time
from contextlib import asynccontextmanager, suppress
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import orchestrator
from .dsp import Calibration
from .errors import AlphasoftError, ConfigError
from .orchestrator import Engine, RunConfig
from .sources import Eyes

SNAPSHOT_EVERY_TICKS = 25  # 25/500 Hz = 50 ms of simulated time (20 Hz)


def config_to_dict(config: RunConfig) -> dict:
    def convert(obj):
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {k: convert(v) for k, v in dataclasses.asdict(obj).items()}
        if isinstance(obj, dict):
            return {k: convert(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [convert(v) for v in obj]
        if isinstance(obj, Eyes):
            return obj.value
        if isinstance(obj, Path):
            return str(obj)
        return obj

    return convert(config)


class SnapshotHub:
    """Thread-safe fan-out of snapshot dicts with latest-wins semantics."""

    def __init__(self):
        self._lock = threading.Lock()
        self._offers: list[Callable[[dict], None]] = []
        self.latest: Optional[dict] = None

    def subscribe(self, offer: Callable[[dict], None]) -> Callable[[], None]:
        with self._lock:
            self._offers.append(offer)

        def unsubscribe():
            with self._lock:
                if offer in self._offers:
                    self._offers.remove(offer)

        return unsubscribe

    def publish(self, snapshot: dict):
        with self._lock:
            self.latest = snapshot
            offers = list(self._offers)
        for offer in offers:
            offer(snapshot)


class LiveSession:
    """One realtime run on a worker thread, feeding a snapshot hub."""

    def __init__(self, config: RunConfig, hub: SnapshotHub, out_dir: Path,
                 run_id: int, time_scale: float = 1.0):
        self.config = config
        self.hub = hub
        self.out_dir = out_dir
        self.run_id = run_id
        self.time_scale = time_scale
        cal = config.calibration or orchestrator.auto_calibrate(config)
        self.engine = Engine(config, cal)
        self._commands: queue.SimpleQueue = queue.SimpleQueue()
        self._thread = threading.Thread(target=self._main, daemon=True,
                                        name=f"alphasoft-run-{run_id}")
        self.finished = threading.Event()

    def start(self):
        self._thread.start()

    def enqueue(self, apply_fn: Callable[[Engine], None]):
        self._commands.put(apply_fn)

    def stop(self):
        self.enqueue(lambda engine: setattr(engine, "stop_requested", True))

    def join(self, timeout: Optional[float] = None):
        self._thread.join(timeout)

    def _drain(self) -> list:
        out = []
        while True:
            try:
                out.append(self._commands.get_nowait())
            except queue.Empty:
                return out

    def _main(self):
        start = time.monotonic()

        def pace(t_sim: float):
            delay = start + t_sim / self.time_scale - time.monotonic()
            if delay > 0:
                time.sleep(delay)

        def on_tick(engine: Engine, m: int, t: float):
            if m % SNAPSHOT_EVERY_TICKS == 0:
                snap = engine.snapshot()
                snap.update(type="snapshot", run_active=True, run_id=self.run_id)
                self.hub.publish(snap)

        try:
            self.engine.run(self.out_dir, command_source=self._drain,
                            on_tick=on_tick, pace_fn=pace)
        finally:
            self.finished.set()
            final = self.engine.snapshot()
            final.update(type="snapshot", run_active=False, run_id=self.run_id)
            self.hub.publish(final)


class BciService:
    """Service state: at most one live session plus an idle heartbeat."""

    def __init__(self, base_config: Optional[RunConfig] = None,
                 out_root: str | Path = "runs", time_scale: float = 1.0):
        self.base_config = (base_config or RunConfig()).validate()
        self.out_root = Path(out_root)
        self.time_scale = time_scale
        self.hub = SnapshotHub()
        self.session: Optional[LiveSession] = None
        self._run_counter = 0
        self._idle_stop = threading.Event()
        self._idle_thread: Optional[threading.Thread] = None
        self._started_at = time.monotonic()

    # -- lifecycle --

    def start(self):
        self._idle_stop.clear()
        self._idle_thread = threading.Thread(target=self._idle_loop, daemon=True,
                                             name="alphasoft-idle")
        self._idle_thread.start()

    def shutdown(self):
        self._idle_stop.set()
        if self.session is not None:
            self.session.stop()
            self.session.join(timeout=5.0)
        if self._idle_thread is not None:
            self._idle_thread.join(timeout=1.0)

    def _idle_loop(self):
        while not self._idle_stop.wait(1.0 / 20.0):
            if self.run_active():
                continue
            self.hub.publish(self._idle_snapshot())

    def _idle_snapshot(self) -> dict:
        params = self.base_config.mapping
        return {
            "type": "snapshot", "run_active": False, "run_id": None,
            "t_s": round(time.monotonic() - self._started_at, 3),
            "eyes": None, "a_psd": None, "gated": False,
            "override_alpha": None, "spectrum": None,
            "character": None,
            "flower": {"setpoint_kpa": None, "p_filt_kpa": None,
                       "valve_open": False, "phase": "idle", "remaining_s": 0.0},
            "params": {"alpha_gain": params.alpha_gain,
                       "beta_gain": params.beta_gain,
                       "gamma_gain": params.gamma_gain,
                       "p_ref": None, "threshold": None,
                       "guard": self.base_config.guard_enabled},
        }

    def run_active(self) -> bool:
        return self.session is not None and not self.session.finished.is_set()

    def current_config(self) -> RunConfig:
        return self.session.config if self.run_active() else self.base_config

    # -- command handling --

    def apply_command(self, msg: dict) -> dict:
        """Validate a command message now; queue its effect for the next tick."""
        cmd = msg.get("type")
        try:
            if cmd == "start":
                return self._cmd_start(msg)
            if cmd == "stop":
                return self._cmd_stop()
            if cmd == "reset":
                self._cmd_stop()
                self.session = None
                return {"type": "ack", "cmd": "reset"}
            if not self.run_active():
                return {"type": "rejected", "cmd": cmd, "reason": "no active run"}
            handler = {
                "set_eyes": self._cmd_set_eyes,
                "override_alpha": self._cmd_override,
                "clear_override": self._cmd_clear_override,
                "set_param": self._cmd_set_param,
                "set_guard": self._cmd_set_guard,
            }.get(cmd)
            if handler is None:
                return {"type": "rejected", "cmd": cmd,
                        "reason": f"unknown command type {cmd!r}"}
            return handler(msg)
        except AlphasoftError as exc:
            return {"type": "rejected", "cmd": cmd, "reason": str(exc)}

    def _cmd_start(self, msg: dict) -> dict:
        if self.run_active():
            return {"type": "rejected", "cmd": "start",
                    "reason": "a run is already active"}
        overrides = msg.get("config") or {}
        if not isinstance(overrides, dict):
            return {"type": "rejected", "cmd": "start",
                    "reason": "config must be an object of flat keys"}
        config = orchestrator.build_config(overrides, self.base_config)
        self._run_counter += 1
        out_dir = self.out_root / f"run_{self._run_counter:03d}"
        self.session = LiveSession(config, self.hub, out_dir,
                                   self._run_counter, self.time_scale)
        self.session.start()
        return {"type": "ack", "cmd": "start", "run_id": self._run_counter,
                "out_dir": str(out_dir)}

    def _cmd_stop(self) -> dict:
        if self.session is not None:
            self.session.stop()
        return {"type": "ack", "cmd": "stop"}

    def _cmd_set_eyes(self, msg: dict) -> dict:
        raw = msg.get("eyes")
        if raw not in ("open", "closed"):
            raise ConfigError(f"eyes must be 'open' or 'closed', got {raw!r}")
        eyes = Eyes(raw)
        if self.session.engine.synth is None:
            raise ConfigError("eyes steering requires the synthetic source")
        self.session.enqueue(lambda engine: engine.set_eyes(eyes))
        return {"type": "ack", "cmd": "set_eyes", "eyes": raw}

    def _cmd_override(self, msg: dict) -> dict:
        value = msg.get("value")
        if not isinstance(value, (int, float)) or not (0 <= value <= 100):
            raise ConfigError(f"override value must be in 0..100, got {value!r}")
        value = int(round(value))
        self.session.enqueue(lambda engine: engine.set_override_alpha(value))
        return {"type": "ack", "cmd": "override_alpha", "value": value}

    def _cmd_clear_override(self, msg: dict) -> dict:
        self.session.enqueue(lambda engine: engine.set_override_alpha(None))
        return {"type": "ack", "cmd": "clear_override"}

    def _cmd_set_param(self, msg: dict) -> dict:
        name, value = msg.get("name"), msg.get("value")
        engine = self.session.engine
        if name in ("threshold", "p_ref"):
            current = engine.cal
            new_cal = Calibration(
                p_ref=float(value) if name == "p_ref" else current.p_ref,
                threshold=float(value) if name == "threshold" else current.threshold)
            self.session.enqueue(lambda e: e.set_calibration(new_cal))
        else:
            # raises ContractViolation on invalid name or value
            new_params = engine.mapping_params.with_param(name, value)
            self.session.enqueue(lambda e: e.set_mapping_params(new_params))
        return {"type": "ack", "cmd": "set_param", "name": name}

    def _cmd_set_guard(self, msg: dict) -> dict:
        enabled = msg.get("enabled")
        if not isinstance(enabled, bool):
            raise ConfigError(f"enabled must be a boolean, got {enabled!r}")
        self.session.enqueue(lambda engine: engine.set_guard(enabled))
        return {"type": "ack", "cmd": "set_guard", "enabled": enabled}


class _AsyncSubscriber:
    """Bridges hub publishes (pipeline thread) into an asyncio queue."""

    def __init__(self, loop: asyncio.AbstractEventLoop):
        self.loop = loop
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=1)

    def offer(self, snapshot: dict):
        self.loop.call_soon_threadsafe(self._put, snapshot)

    def _put(self, snapshot: dict):
        if self.queue.full():
            self.queue.get_nowait()  # drop the stale one; latest wins
        self.queue.put_nowait(snapshot)


def create_app(service: BciService) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        service.start()
        yield
        service.shutdown()

    app = FastAPI(title="alphasoft service", lifespan=lifespan)

    @app.get("/health")
    def health():
        return {"status": "ok", "run_active": service.run_active()}

    @app.get("/config")
    def config():
        return config_to_dict(service.current_config())

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        sub = _AsyncSubscriber(asyncio.get_running_loop())
        unsubscribe = service.hub.subscribe(sub.offer)
        send_lock = asyncio.Lock()

        async def sender():
            while True:
                snap = await sub.queue.get()
                async with send_lock:
                    await ws.send_text(json.dumps(snap))

        async def receiver():
            while True:
                msg = await ws.receive_json()
                reply = service.apply_command(msg)
                async with send_lock:
                    await ws.send_text(json.dumps(reply))

        tasks = [asyncio.create_task(sender()), asyncio.create_task(receiver())]
        try:
            done, pending = await asyncio.wait(tasks,
                                               return_when=asyncio.FIRST_EXCEPTION)
            for task in pending:
                task.cancel()
            for task in (*done, *pending):
                with suppress(WebSocketDisconnect, RuntimeError,
                              asyncio.CancelledError):
                    await task
        finally:
            unsubscribe()

    return app


class NdjsonTcpServer:
    """Plain-TCP fallback: same JSON payloads, one per line.

    Snapshots stream out; any line received is parsed as a command and
    answered with the usual ack/rejected payload.
    """

    def __init__(self, service: BciService, bind: str = "127.0.0.1",
                 port: int = 0):
        self.service = service
        outer = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                snapshots: queue.Queue = queue.Queue(maxsize=1)

                def offer(snap: dict):
                    try:
                        snapshots.put_nowait(snap)
                    except queue.Full:
                        try:
                            snapshots.get_nowait()
                            snapshots.put_nowait(snap)
                        except (queue.Empty, queue.Full):
                            pass

                unsubscribe = outer.service.hub.subscribe(offer)
                stop = threading.Event()

                def writer():
                    try:
                        while not stop.is_set():
                            try:
                                snap = snapshots.get(timeout=0.2)
                            except queue.Empty:
                                continue
                            self.wfile.write(json.dumps(snap).encode() + b"\n")
                            self.wfile.flush()
                    except OSError:
                        pass

                thread = threading.Thread(target=writer, daemon=True)
                thread.start()
                try:
                    for line in self.rfile:
                        line = line.strip()
                        if not line:
                            continue
                        try:
                            msg = json.loads(line)
                        except json.JSONDecodeError:
                            reply = {"type": "rejected", "reason": "invalid JSON"}
                        else:
                            reply = outer.service.apply_command(msg)
                        self.wfile.write(json.dumps(reply).encode() + b"\n")
                        self.wfile.flush()
                except OSError:
                    pass
                finally:
                    stop.set()
                    unsubscribe()
                    thread.join(timeout=1.0)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((bind, port), Handler)
        self.port = self._server.server_address[1]
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True, name="alphasoft-tcp")

    def start(self):
        self._thread.start()

    def shutdown(self):
        self._server.shutdown()
        self._server.server_close()


def serve(config: RunConfig, bind: str = "127.0.0.1", port: int = 8787,
          tcp_port: Optional[int] = None, out_root: str | Path = "runs"):
    """Run the service under uvicorn until interrupted."""
    import uvicorn

    service = BciService(config, out_root=out_root)
    app = create_app(service)
    tcp = None
    if tcp_port is not None:
        tcp = NdjsonTcpServer(service, bind, tcp_port)
        tcp.start()
    try:
        uvicorn.run(app, host=bind, port=port, log_level="info")
    finally:
        if tcp is not None:
            tcp.shutdown()
