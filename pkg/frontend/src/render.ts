// Flat DOM rendering of the model: the interface is a dialog console, so
// panels, labels, and timers are lists with world positions printed as text.

import { UserAction } from "./actions";
import { TaskPanel, UiModel, timerRemainingS } from "./model";

export type Dispatch = (action: UserAction) => void;

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderStatus(model: UiModel): HTMLElement {
  const bar = el("div", `status status-${model.connection}`);
  const session = model.sessionId ? ` session ${model.sessionId.slice(0, 8)}` : "";
  bar.appendChild(el("span", "status-conn", `${model.connection}${session}`));
  for (const notice of model.notices.slice(-3)) {
    bar.appendChild(el("span", "status-notice", notice));
  }
  return bar;
}

function renderChat(model: UiModel): HTMLElement {
  const list = el("div", "chat");
  for (const bubble of model.chat) {
    list.appendChild(el("div", `bubble bubble-${bubble.side}`, bubble.text));
  }
  for (const diag of model.diagnostics) {
    list.appendChild(el("div", "bubble bubble-diagnostic", diag));
  }
  return list;
}

function renderSuggestions(model: UiModel, dispatch: Dispatch): HTMLElement {
  const row = el("div", "suggestions");
  for (const text of model.suggestions) {
    const button = el("button", "suggestion", text) as HTMLButtonElement;
    button.onclick = () => dispatch({ kind: "utterance", text });
    row.appendChild(button);
  }
  return row;
}

function renderPanel(panel: TaskPanel): HTMLElement {
  const box = el("div", "panel");
  box.appendChild(el("h2", "panel-title", panel.taskName));
  panel.steps.forEach((step, i) => {
    const active = panel.cursor !== null && panel.cursor[0] === i;
    const row = el("div", active ? "step step-active" : "step");
    row.appendChild(el("span", "step-text", `${i + 1}. ${step.instruction}`));
    if (step.kind === "gather") {
      const missing = step.objects.filter((o) => !panel.gathered.includes(o));
      row.appendChild(el("span", "step-gather", `gathered: ${panel.gathered.join(", ") || "none"}`));
      if (missing.length) {
        row.appendChild(el("span", "step-missing", `missing: ${missing.join(", ")}`));
      }
    }
    step.substeps.forEach((sub, j) => {
      const subActive = active && panel.cursor !== null && panel.cursor[1] === j;
      row.appendChild(el("div", subActive ? "substep substep-active" : "substep", `${i + 1}.${j + 1} ${sub}`));
    });
    box.appendChild(row);
  });
  return box;
}

function renderOverlays(model: UiModel): HTMLElement {
  const box = el("div", "overlays");
  for (const label of model.objectLabels) {
    const [x, y, z] = label.position;
    box.appendChild(
      el("div", "object-label", `${label.label} @ (${x.toFixed(2)}, ${y.toFixed(2)}, ${z.toFixed(2)})`),
    );
  }
  for (const holo of model.holograms) {
    box.appendChild(el("div", "hologram", `${holo.kind} ${holo.hologramId}${holo.text ? `: ${holo.text}` : ""}`));
  }
  for (const timer of model.timers) {
    const remaining = timerRemainingS(timer, model.lastTimeNs);
    box.appendChild(el("div", "timer", `${timer.timerId}: ${Math.ceil(remaining)}s left`));
  }
  return box;
}

function renderControls(dispatch: Dispatch): HTMLElement {
  const box = el("div", "controls");

  const input = el("input", "say-input") as HTMLInputElement;
  input.placeholder = "say or ask something";
  const say = () => {
    const text = input.value.trim();
    if (!text) return;
    dispatch({ kind: "utterance", text });
    input.value = "";
  };
  input.onkeydown = (ev) => {
    if (ev.key === "Enter") say();
  };
  const sayButton = el("button", "say", "Say") as HTMLButtonElement;
  sayButton.onclick = say;

  const declareInput = el("input", "declare-input") as HTMLInputElement;
  declareInput.placeholder = "object label";
  const declareButton = el("button", "declare", "I have it") as HTMLButtonElement;
  declareButton.onclick = () => {
    const label = declareInput.value.trim();
    if (!label) return;
    dispatch({ kind: "declare_object", label });
    declareInput.value = "";
  };

  const doneButton = el("button", "done", "Done") as HTMLButtonElement;
  doneButton.onclick = () => dispatch({ kind: "step_done" });

  const palm = el("input", "palm-toggle") as HTMLInputElement;
  palm.type = "checkbox";
  palm.onchange = () => dispatch({ kind: "palm_open", open: palm.checked });
  const palmLabel = el("label", "palm-label", "palm open");
  palmLabel.prepend(palm);

  const moveButton = el("button", "move-panel", "Come here") as HTMLButtonElement;
  moveButton.onclick = () => dispatch({ kind: "move_panel" });

  box.append(input, sayButton, declareInput, declareButton, doneButton, palmLabel, moveButton);
  return box;
}

export function render(root: HTMLElement, model: UiModel, dispatch: Dispatch): void {
  root.textContent = "";
  root.appendChild(renderStatus(model));
  if (model.panel !== null) {
    root.appendChild(renderPanel(model.panel));
  }
  root.appendChild(renderChat(model));
  root.appendChild(renderSuggestions(model, dispatch));
  root.appendChild(renderOverlays(model));
  root.appendChild(renderControls(dispatch));
}
