// Action layer: App turns user intent into wire messages and folds every
// server frame into state, notifying the renderer after each change.
// bindDom wires one delegated listener per event type onto a root element,
// reading data-action attributes that render.ts put there.

import { WorldSocket } from "./net.js";
import { CarbonState, Envelope, WindFarmState } from "./protocol.js";
import { applyServer, ClientState, initialState } from "./state.js";

export class App {
  state: ClientState = initialState();

  constructor(
    private socket: WorldSocket,
    private onChange: (state: ClientState) => void = () => {},
  ) {
    socket.onMessage = (env: Envelope) => {
      this.state = applyServer(this.state, env);
      this.onChange(this.state);
    };
  }

  // -- identity and presence ------------------------------------------------

  hello(displayName: string, locale: string): void {
    this.socket.send("hello", { display_name: displayName, locale });
  }

  enterRoom(roomId: string): void {
    this.socket.send("enter_room", { room_id: roomId });
  }

  move(x: number, y: number): void {
    this.socket.send("move", { x, y });
  }

  syncRoom(): void {
    this.socket.send("sync_room", {});
  }

  chat(text: string): void {
    this.socket.send("chat", { text });
  }

  setLocale(locale: string): void {
    this.socket.send("set_locale", { locale });
  }

  // -- scenario play ----------------------------------------------------------

  startScenario(scenarioId: string, seed?: number): void {
    const body: Record<string, unknown> = { scenario_id: scenarioId };
    if (seed !== undefined) body.seed = seed;
    this.socket.send("start_scenario", body);
  }

  choose(choiceId: string): void {
    const view = this.state.view;
    if (!view) return;
    this.socket.send("input", {
      kind: "choose",
      node_id: view.node_id,
      choice_id: choiceId,
    });
  }

  answer(optionId: string): void {
    const question = this.state.view?.question;
    if (!question) return;
    this.socket.send("input", {
      kind: "answer",
      question_id: question.id,
      option_id: optionId,
    });
  }

  // -- wind farm staging --------------------------------------------------

  gridToggle(x: number, y: number): void {
    const staged = this.state.activity;
    if (!staged || staged.kind !== "wind_farm") return;
    const placed = (staged as WindFarmState).placements.some(
      ([px, py]) => px === x && py === y,
    );
    this.socket.send("activity_edit", {
      action: placed ? "remove" : "place",
      x,
      y,
    });
  }

  gridReset(): void {
    this.socket.send("activity_edit", { action: "reset" });
  }

  submitLayout(): void {
    const staged = this.state.activity;
    const view = this.state.view;
    if (!view || !staged || staged.kind !== "wind_farm") return;
    this.socket.send("input", {
      kind: "activity_result",
      node_id: view.node_id,
      result: { placements: (staged as WindFarmState).placements },
    });
  }

  // -- carbon ledger staging ------------------------------------------------

  addEntry(optionId: string, quantity: number): void {
    this.socket.send("activity_edit", {
      action: "add_entry",
      option_id: optionId,
      quantity,
    });
  }

  removeEntry(index: number): void {
    this.socket.send("activity_edit", { action: "remove_entry", index });
  }

  ledgerReset(): void {
    this.socket.send("activity_edit", { action: "reset" });
  }

  submitLedger(): void {
    const staged = this.state.activity;
    const view = this.state.view;
    if (!view || !staged || staged.kind !== "carbon_day") return;
    this.socket.send("input", {
      kind: "activity_result",
      node_id: view.node_id,
      result: { entries: (staged as CarbonState).entries },
    });
  }

  close(): void {
    this.socket.close();
  }
}

// -- DOM delegation -----------------------------------------------------------

export function bindDom(root: HTMLElement, app: App): void {
  root.addEventListener("click", (event) => {
    const el = (event.target as HTMLElement).closest("[data-action]");
    if (!(el instanceof HTMLElement)) return;
    const action = el.dataset.action;
    switch (action) {
      case "hello": {
        const input = root.querySelector<HTMLInputElement>("#player-name");
        const name = input?.value.trim();
        if (name) app.hello(name, app.state.topology?.default_locale ?? "en");
        break;
      }
      case "enter-room":
        app.enterRoom(el.dataset.room!);
        break;
      case "start-scenario":
        app.startScenario(el.dataset.scenario!);
        break;
      case "choose":
        app.choose(el.dataset.choice!);
        break;
      case "answer":
        app.answer(el.dataset.option!);
        break;
      case "grid-cell":
        app.gridToggle(Number(el.dataset.x), Number(el.dataset.y));
        break;
      case "grid-reset":
      case "ledger-reset":
        app.gridReset();
        break;
      case "submit-layout":
        app.submitLayout();
        break;
      case "add-entry": {
        const optionId = el.dataset.option!;
        const input = root.querySelector<HTMLInputElement>(
          `[data-quantity-for="${optionId}"]`,
        );
        const quantity = Number(input?.value ?? "1");
        if (Number.isFinite(quantity) && quantity >= 0) {
          app.addEntry(optionId, quantity);
        }
        break;
      }
      case "remove-entry":
        app.removeEntry(Number(el.dataset.index));
        break;
      case "submit-ledger":
        app.submitLedger();
        break;
      case "chat": {
        const input = root.querySelector<HTMLInputElement>("#chat-input");
        const text = input?.value.trim();
        if (text) {
          app.chat(text);
          input!.value = "";
        }
        break;
      }
    }
  });

  root.addEventListener("change", (event) => {
    const el = event.target as HTMLElement;
    if (el instanceof HTMLSelectElement && el.dataset.action === "set-locale") {
      app.setLocale(el.value);
    }
  });
}
