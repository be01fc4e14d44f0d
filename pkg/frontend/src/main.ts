// Operator station page: three camera feeds, joint readout, steering surface
// and the scoring panel. All state lives in ConsoleClient; this file only
// moves it into the DOM.

import { ConsoleClient } from "./client.js";
import { applyKey } from "./input.js";
import { CAMERA_NAMES, EventKind } from "./protocol.js";
import { ALPHAS, SUBTASKS, formatBeta, formatScore } from "./session.js";

const qs = new URLSearchParams(location.search);
const url = qs.get("server") ?? `ws://${location.hostname || "127.0.0.1"}:7451`;

const client = new ConsoleClient({ url });

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
};

// --- feeds -------------------------------------------------------------------

const feedImgs = new Map<string, HTMLImageElement>();
const feedUrls = new Map<string, string>();
for (const name of CAMERA_NAMES) {
  const panel = document.createElement("div");
  panel.className = "feed";
  const label = document.createElement("div");
  label.className = "feed-label";
  label.textContent = name;
  const img = document.createElement("img");
  img.alt = `${name} camera`;
  panel.append(label, img);
  $("feeds").appendChild(panel);
  feedImgs.set(name, img);
}

function renderFeeds(): void {
  for (const view of client.feeds.views) {
    if (!view.frame) continue;
    const img = feedImgs.get(view.name)!;
    const old = feedUrls.get(view.name);
    const blob = new Blob([view.frame.payload as BlobPart], { type: "image/jpeg" });
    const next = URL.createObjectURL(blob);
    img.src = next;
    feedUrls.set(view.name, next);
    if (old) URL.revokeObjectURL(old);
  }
}

// --- steering ----------------------------------------------------------------

const pad = $("steer");
let tracking = false;
pad.addEventListener("pointerdown", (ev) => {
  tracking = true;
  pad.setPointerCapture(ev.pointerId);
});
pad.addEventListener("pointerup", () => (tracking = false));
pad.addEventListener("pointermove", (ev) => {
  if (tracking) client.input.pointerMove(ev.movementX, ev.movementY);
});
pad.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  client.input.depthMove(ev.deltaY * -0.25);
});
window.addEventListener("keydown", (ev) => {
  if (applyKey(client.input, ev.key, true)) ev.preventDefault();
});
window.addEventListener("keyup", (ev) => {
  if (applyKey(client.input, ev.key, false)) ev.preventDefault();
});

// --- session controls ----------------------------------------------------------

function toast(text: string): void {
  const box = $("toast");
  box.textContent = text;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 2500);
}

function sendOrToast(kind: EventKind, fields?: { subtaskId?: number; alpha?: number; label?: string }): void {
  if (!client.sendEvent(kind, fields) && client.session.lastError) {
    toast(client.session.lastError);
  }
}

$("round-start").addEventListener("click", () => sendOrToast(EventKind.RoundStart));
$("round-finish").addEventListener("click", () => sendOrToast(EventKind.RoundFinish));
$("subtask-complete").addEventListener("click", () => sendOrToast(EventKind.SubtaskComplete));
$("subtask-start").addEventListener("click", () => {
  const next = client.session.active ? client.session.active.subtaskId : nextSubtaskId();
  const alpha = Number(($("alpha") as HTMLSelectElement).value);
  sendOrToast(EventKind.SubtaskStart, { subtaskId: next, alpha });
});

function nextSubtaskId(): number {
  return (client.session.completed.length % 3) + 1;
}

const componentBox = $("components");
function renderComponents(): void {
  componentBox.replaceChildren();
  const active = client.session.active;
  if (!active) return;
  const spec = SUBTASKS.find((s) => s.id === active.subtaskId);
  if (!spec) return;
  for (const [label, points] of spec.components) {
    const btn = document.createElement("button");
    btn.textContent = `${label} (+${points})`;
    btn.disabled = active.achieved.includes(label);
    btn.addEventListener("click", () => sendOrToast(EventKind.ComponentAchieved, { label }));
    componentBox.appendChild(btn);
  }
}

const alphaSelect = $("alpha") as HTMLSelectElement;
for (const [mode, value] of Object.entries(ALPHAS)) {
  const opt = document.createElement("option");
  opt.value = String(value);
  opt.textContent = `${mode} (α=${value})`;
  if (value === ALPHAS.remote) opt.selected = true;
  alphaSelect.appendChild(opt);
}

// --- readouts ------------------------------------------------------------------

function renderStatus(): void {
  $("status").textContent = client.status + (client.rttMs !== null ? ` · rtt ${client.rttMs.toFixed(1)} ms` : "");
  $("status").dataset.state = client.status;
  ($("retry") as HTMLButtonElement).hidden = client.status === "open" || client.status === "connecting";
}

function renderJoints(): void {
  if (!client.joints) return;
  const v = client.joints;
  const row = (vals: Float64Array) => [...vals].map((x) => x.toFixed(3).padStart(7)).join(" ");
  $("joints").textContent =
    `L ${row(v.slice(0, 7))}  grip ${v[14].toFixed(2)}\n` +
    `R ${row(v.slice(7, 14))}  grip ${v[15].toFixed(2)}\n` +
    `head ${v[16].toFixed(3)} ${v[17].toFixed(3)}   clutch ${client.input.clutch ? "ENGAGED" : "free"}`;
}

function renderSession(): void {
  const s = client.session;
  $("round").textContent = s.roundOpen ? `round ${s.round}` : s.round > 0 ? `round ${s.round} done` : "no round";
  const active = s.active;
  $("beta").textContent = active
    ? `subtask ${active.subtaskId} · s=${active.s} · β ${formatBeta(s.runningBetaS(Date.now()))}`
    : "idle";
  $("score").textContent = formatScore(s.totalScore());
  const rows = s.completed
    .map((r) => `#${r.subtaskId}  s=${r.s}  β=${formatBeta(r.betaS)}  α=${r.alpha}  → ${formatScore(r.score)}`)
    .join("\n");
  $("results").textContent = rows || "—";
  renderComponents();
}

function renderCounters(): void {
  const video = client.feeds.views.map((v) => `${v.name}: ${v.stats.received}/${v.stats.dropped} drop`).join("  ");
  $("counters").textContent = `${video}  ·  decode errors ${client.decodeErrors}`;
}

$("retry").addEventListener("click", () => {
  client.close();
  client.start();
});

client.start();
function frame(): void {
  renderStatus();
  renderFeeds();
  renderJoints();
  renderSession();
  renderCounters();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
