// Bootstrap: connect the socket, wire the controls, start the renderer.

import { DashboardClient, wsUrlFromQuery, type SocketLike } from "./client.js";
import { Renderer } from "./render.js";
import { UiState } from "./state.js";
import type { Command } from "./types.js";

const state = new UiState();
const renderer = new Renderer(state);

function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const adapter: SocketLike = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onopen: null,
    onclose: null,
    onmessage: null,
  };
  ws.onopen = () => adapter.onopen?.();
  ws.onclose = () => adapter.onclose?.();
  ws.onmessage = (ev) => adapter.onmessage?.({ data: String(ev.data) });
  return adapter;
}

const url = wsUrlFromQuery(window.location.search);
const client = new DashboardClient(() => browserSocket(url), state);

// repaint on every state change; the renderer collapses bursts into one rAF
const origApply = state.applyMessage.bind(state);
state.applyMessage = (msg) => { origApply(msg); renderer.markDirty(); };
const origConn = state.setConnection.bind(state);
state.setConnection = (s) => { origConn(s); renderer.markDirty(); };

client.connect();

const send = (command: Command) => {
  client.send(command);
  renderer.markDirty();
};

const el = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

// -- run control --
el<HTMLButtonElement>("btn-start").addEventListener("click", () => {
  const config: Record<string, unknown> = {
    embodiment: el<HTMLSelectElement>("start-embodiment").value,
    seed: Number(el<HTMLInputElement>("start-seed").value) || 0,
  };
  const duration = Number(el<HTMLInputElement>("start-duration").value);
  if (duration > 0) config.duration_s = duration;
  send({ type: "start", config });
});
el<HTMLButtonElement>("btn-stop").addEventListener("click", () => send({ type: "stop" }));
el<HTMLButtonElement>("btn-reset").addEventListener("click", () => send({ type: "reset" }));

// -- emotional-state steering --
el<HTMLButtonElement>("btn-eyes-open").addEventListener("click",
  () => send({ type: "set_eyes", eyes: "open" }));
el<HTMLButtonElement>("btn-eyes-closed").addEventListener("click",
  () => send({ type: "set_eyes", eyes: "closed" }));

// override slider sends on release, not while dragging
const slider = el<HTMLInputElement>("override-slider");
const sliderLabel = el<HTMLSpanElement>("override-label");
slider.addEventListener("input", () => { sliderLabel.textContent = slider.value; });
slider.addEventListener("change",
  () => send({ type: "override_alpha", value: Number(slider.value) }));
el<HTMLButtonElement>("btn-clear-override").addEventListener("click",
  () => send({ type: "clear_override" }));

// -- parameter form: submit sends the batch of edited fields --
el<HTMLFormElement>("param-form").addEventListener("submit", (event) => {
  event.preventDefault();
  for (const name of ["alpha_gain", "beta_gain", "gamma_gain", "threshold"]) {
    const input = el<HTMLInputElement>(`param-${name}`);
    if (input.value.trim() !== "") {
      send({ type: "set_param", name, value: Number(input.value) });
    }
  }
});
el<HTMLInputElement>("guard-switch").addEventListener("change", (event) => {
  send({ type: "set_guard", enabled: (event.target as HTMLInputElement).checked });
});

renderer.markDirty();
