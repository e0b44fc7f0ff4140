// End to end: spawn the real Python world server, connect through the
// production client modules (WorldSocket + App), and play full scenarios.
// The only test-side affordance is a waitFor helper over state snapshots.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readdirSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { App } from "../src/controller.js";
import { SocketCtor, WorldSocket } from "../src/net.js";
import { renderApp } from "../src/render.js";
import { ClientState } from "../src/state.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const repoRoot = path.resolve(here, "..", "..");
const contentDir = path.join(repoRoot, "content");

let server: ChildProcess;
let dataDir: string;
let port: number;

beforeAll(async () => {
  dataDir = mkdtempSync(path.join(tmpdir(), "raise-e2e-"));
  server = spawn(
    "python3",
    ["-m", "raise_world.cli", "serve",
     "--content-dir", contentDir, "--data-dir", dataDir, "--port", "0"],
    { cwd: repoRoot, stdio: ["ignore", "ignore", "pipe"] },
  );
  port = await new Promise<number>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(
      () => reject(new Error(`server never reported listen:\n${buffer}`)),
      15000,
    );
    server.stderr!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const lines = buffer.split("\n");
      buffer = lines.pop()!; // keep any partial line for the next chunk
      for (const line of lines) {
        if (!line.trim()) continue;
        try {
          const entry = JSON.parse(line);
          if (entry.event === "listen") {
            clearTimeout(timer);
            resolve(entry.port);
            return;
          }
        } catch {
          // non-JSON noise; ignore
        }
      }
    });
    server.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`server exited early (${code}):\n${buffer}`));
    });
  });
}, 30000);

afterAll(async () => {
  if (server && server.exitCode === null) {
    const gone = new Promise((resolve) => server.once("exit", resolve));
    server.kill("SIGTERM");
    await gone;
  }
});

// -- harness ------------------------------------------------------------------

class TestClient {
  app: App;
  private waiters: {
    pred: (s: ClientState) => boolean;
    resolve: (s: ClientState) => void;
  }[] = [];

  static async connect(): Promise<TestClient> {
    const socket = await WorldSocket.connect(
      `ws://127.0.0.1:${port}/`,
      WebSocket as unknown as SocketCtor,
    );
    return new TestClient(socket);
  }

  private constructor(private socket: WorldSocket) {
    this.app = new App(socket, (state) => {
      this.waiters = this.waiters.filter((w) => {
        if (!w.pred(state)) return true;
        w.resolve(state);
        return false;
      });
    });
  }

  get state(): ClientState {
    return this.app.state;
  }

  waitFor(
    pred: (s: ClientState) => boolean,
    label: string,
    timeoutMs = 5000,
  ): Promise<ClientState> {
    if (pred(this.app.state)) return Promise.resolve(this.app.state);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        reject(
          new Error(
            `timed out waiting for ${label}; view=${this.app.state.view?.node_id}, ` +
              `errors=${JSON.stringify(this.app.state.errors)}`,
          ),
        );
      }, timeoutMs);
      this.waiters.push({
        pred,
        resolve: (s) => {
          clearTimeout(timer);
          resolve(s);
        },
      });
    });
  }

  close(): void {
    this.socket.close();
  }
}

function atNode(nodeId: string) {
  return (s: ClientState) => s.view?.node_id === nodeId;
}

function atQuestion(questionId: string, attempts?: number) {
  return (s: ClientState) =>
    s.view?.question?.id === questionId &&
    (attempts === undefined || s.view.question.attempts_used === attempts);
}

interface SessionFile {
  file: string;
  meta: any;
  end: any;
  last: any;
}

function readSessionFiles(): SessionFile[] {
  const root = path.join(dataDir, "sessions");
  const out: SessionFile[] = [];
  for (const date of readdirSync(root)) {
    for (const name of readdirSync(path.join(root, date))) {
      const file = path.join(root, date, name);
      const lines = readFileSync(file, "utf8")
        .trim()
        .split("\n")
        .map((l) => JSON.parse(l));
      out.push({
        file,
        meta: lines[0],
        end: lines.find((l) => l.record === "end"),
        last: lines[lines.length - 1],
      });
    }
  }
  return out;
}

// -- scenarios ------------------------------------------------------------------

describe("tutorial and wind farm, one sitting", () => {
  it("plays both scenarios to a pass and matches the stored records", async () => {
    const client = await TestClient.connect();
    try {
      client.app.hello("Ana", "en");
      await client.waitFor(
        (s) => s.phase === "world" && s.profile !== null,
        "welcome + profile",
      );
      expect(client.state.playerId).toBeTruthy();
      expect(client.state.topology!.locales).toContain("pt");

      client.app.enterRoom("plaza");
      await client.waitFor((s) => s.room?.room_id === "plaza", "plaza snapshot");
      client.app.enterRoom("training");
      await client.waitFor((s) => s.room?.room_id === "training", "training snapshot");

      // tutorial: two first-try answers, 5 points each
      client.app.startScenario("tutorial-basics", 5);
      await client.waitFor(atNode("welcome"), "tutorial entry");
      client.app.choose("continue");
      await client.waitFor(atNode("meet_guide"), "meet_guide");
      client.app.choose("ready");
      await client.waitFor(atQuestion("q_warming"), "first question");
      client.app.answer("greenhouse");
      await client.waitFor(atQuestion("q_renewable"), "second question");
      client.app.answer("sunlight");
      const tutorialDone = await client.waitFor(
        (s) => s.view?.finished === true,
        "tutorial terminal",
      );
      expect(tutorialDone.view!.outcome!.outcome_key).toBe("outcome.tutorial.pass");
      await client.waitFor(
        (s) => s.profile?.global_score === 10,
        "profile after tutorial",
      );

      // across the plaza to the wind bay
      client.app.enterRoom("plaza");
      await client.waitFor((s) => s.room?.room_id === "plaza", "back in plaza");
      expect(client.state.view).toBeNull(); // room change clears the session pane
      client.app.enterRoom("wind-bay");
      await client.waitFor((s) => s.room?.room_id === "wind-bay", "wind bay");

      client.app.startScenario("windfarm-challenge", 11);
      const briefing = await client.waitFor(atNode("briefing"), "briefing");
      expect(briefing.view!.speaker!.npc_id).toBe("engineer_nora");
      expect(briefing.view!.choices!.map((c) => c.id)).toEqual([
        "ask_why",
        "start_quiz",
      ]);

      // the detour flips the briefed flag, so the ask_why choice disappears
      client.app.choose("ask_why");
      await client.waitFor(atNode("why_wind"), "why_wind");
      client.app.choose("back");
      const rebriefed = await client.waitFor(
        (s) => s.view?.node_id === "briefing" && s.view.choices?.length === 1,
        "briefing minus ask_why",
      );
      expect(rebriefed.view!.choices![0].id).toBe("start_quiz");

      client.app.choose("start_quiz");
      const quiz = await client.waitFor(atQuestion("q_cut_in"), "cut-in question");
      expect(quiz.view!.speaker!.npc_id).toBe("teacher_elena");
      expect(quiz.view!.question!.number).toBe(1);
      expect(quiz.view!.question!.total).toBe(3);

      // two wrong answers: retry feedback, then a hint; third try lands
      client.app.answer("eight");
      await client.waitFor(atQuestion("q_cut_in", 1), "first miss");
      expect(
        client.state.log.some(
          (e) => e.kind === "feedback_given" && e.payload.question_id === "q_cut_in",
        ),
      ).toBe(true);
      client.app.answer("twelve");
      await client.waitFor(atQuestion("q_cut_in", 2), "second miss");
      const hint = client.state.log.find((e) => e.kind === "hint_given");
      expect(hint!.payload.text_key).toBe("windfarm.quiz.q_cut_in.hint");
      expect(client.state.texts["windfarm.quiz.q_cut_in.hint"]).toContain("cut-in");

      client.app.answer("three"); // correct, but attempt 3 earns nothing
      await client.waitFor(atQuestion("q_rated"), "rated-power question");
      expect(client.state.hud!.score).toBe(0);
      client.app.answer("constant");
      await client.waitFor(atQuestion("q_wake"), "wake question");
      expect(client.state.hud!.score).toBe(10);
      client.app.answer("less");
      await client.waitFor(atNode("site_intro"), "site intro");
      expect(client.state.hud!.score).toBe(20);

      client.app.choose("begin");
      const layout = await client.waitFor(atNode("layout_activity"), "layout activity");
      const grid = layout.view!.activity!;
      expect(grid.kind).toBe("wind_farm");
      if (grid.kind === "wind_farm") {
        expect(grid.grid.width).toBe(4);
        expect(grid.grid.height).toBe(4);
        expect(grid.max_turbines).toBe(3);
      }
      expect(layout.activity).toMatchObject({ kind: "wind_farm", placements: [] });

      // stage, unstage, then stage the known-best three-turbine layout
      client.app.gridToggle(0, 0);
      await client.waitFor(
        (s) => s.activity?.kind === "wind_farm" && s.activity.placements.length === 1,
        "first placement staged",
      );
      client.app.gridToggle(0, 0);
      await client.waitFor(
        (s) => s.activity?.kind === "wind_farm" && s.activity.placements.length === 0,
        "placement removed",
      );
      client.app.gridToggle(2, 2);
      client.app.gridToggle(3, 2);
      client.app.gridToggle(3, 3);
      const staged = await client.waitFor(
        (s) => s.activity?.kind === "wind_farm" && s.activity.placements.length === 3,
        "three placements staged",
      );
      if (staged.activity?.kind !== "wind_farm") throw new Error("unreachable");
      expect(staged.activity.placements).toEqual([
        [2, 2],
        [3, 2],
        [3, 3],
      ]);
      expect(staged.activity.evaluation.feasible).toBe(true);
      expect(staged.activity.evaluation.score).toBeCloseTo(31342.701940035273, 6);

      // switch language mid-activity; the server re-renders the open view
      client.app.setLocale("pt");
      await client.waitFor((s) => s.profile?.locale === "pt", "locale saved");
      const ptView = await client.waitFor(
        (s) => s.view?.text.startsWith("Coloca") === true,
        "view re-rendered in pt",
      );
      expect(ptView.view!.text).toBe(
        "Coloca até três turbinas e envia a tua disposição para avaliação.",
      );
      expect(renderApp(ptView)).toContain("Baía do Vento");

      client.app.submitLayout();
      await client.waitFor(atNode("debrief_pass"), "debrief");
      expect(client.state.hud!.score).toBe(70); // 20 quiz + 50 pass bonus
      expect(client.state.activity).toBeNull();
      client.app.choose("finish");
      const done = await client.waitFor((s) => s.view?.finished === true, "wind farm terminal");
      expect(done.view!.outcome!.outcome_key).toBe("outcome.windfarm.pass");
      expect(done.view!.outcome!.text).toBe("Plano aprovado");
      await client.waitFor(
        (s) => s.profile?.global_score === 80,
        "profile after wind farm",
      );
      expect(client.state.profile!.completed["windfarm-challenge"].final_score).toBe(70);

      // the store saw the same story the client did
      const records = readSessionFiles().filter(
        (r) => r.meta.player_id === client.state.playerId,
      );
      const byScenario = new Map(records.map((r) => [r.meta.scenario_id, r]));
      const tutorial = byScenario.get("tutorial-basics")!;
      expect(tutorial.end.status).toBe("finished");
      expect(tutorial.end.outcome.final_score).toBe(10);
      const windfarm = byScenario.get("windfarm-challenge")!;
      expect(windfarm.meta.seed).toBe(11);
      expect(windfarm.end.status).toBe("finished");
      expect(windfarm.end.outcome.final_score).toBe(70);
      expect(windfarm.end.outcome.carbon_total).toBe(0);
      expect(windfarm.end.outcome.hints_used).toBe(1);
      expect(windfarm.last.record).toBe("crc");

      expect(client.state.seqViolations).toEqual([]);
      expect(client.state.errors).toEqual([]);
    } finally {
      client.close();
    }
  }, 30000);
});

describe("carbon day", () => {
  it("stages a ledger, lands in the low tier, and agrees with the stored summary", async () => {
    const client = await TestClient.connect();
    try {
      client.app.hello("Bo", "en");
      await client.waitFor((s) => s.phase === "world" && s.profile !== null, "welcome");
      client.app.enterRoom("plaza");
      await client.waitFor((s) => s.room?.room_id === "plaza", "plaza");
      client.app.enterRoom("carbon-hall");
      await client.waitFor((s) => s.room?.room_id === "carbon-hall", "carbon hall");

      client.app.startScenario("carbon-champions", 3);
      await client.waitFor(atNode("day_intro"), "day intro");
      client.app.choose("start");
      const day = await client.waitFor(atNode("day_activity"), "day activity");
      const activity = day.view!.activity!;
      expect(activity.kind).toBe("carbon_day");
      if (activity.kind !== "carbon_day") throw new Error("unreachable");
      expect(activity.budget_kg).toBe(6.0);
      const veggie = activity.options.find((o) => o.option_id === "meal_veggie")!;
      expect(veggie.factor_kg).toBeCloseTo(1.7, 9);
      expect(day.hud!.carbon_budget_kg).toBe(6.0);

      client.app.addEntry("meal_veggie", 2);
      const staged = await client.waitFor(
        (s) => s.activity?.kind === "carbon_day" && s.activity.entries.length === 1,
        "entry staged",
      );
      if (staged.activity?.kind !== "carbon_day") throw new Error("unreachable");
      expect(staged.activity.total_kg).toBeCloseTo(3.4, 9);
      expect(staged.activity.tier).toBe("low");

      // a second entry, then away with it again
      client.app.addEntry("bus", 10);
      await client.waitFor(
        (s) => s.activity?.kind === "carbon_day" && s.activity.entries.length === 2,
        "second entry staged",
      );
      client.app.removeEntry(1);
      const trimmed = await client.waitFor(
        (s) => s.activity?.kind === "carbon_day" && s.activity.entries.length === 1,
        "entry removed",
      );
      if (trimmed.activity?.kind !== "carbon_day") throw new Error("unreachable");
      expect(trimmed.activity.entries).toEqual([{ option_id: "meal_veggie", quantity: 2 }]);

      client.app.submitLedger();
      await client.waitFor(atNode("fb_low"), "low-tier feedback");
      expect(client.state.hud!.carbon_total).toBeCloseTo(3.4, 9);
      expect(client.state.hud!.carbon_tier).toBe("low");
      expect(client.state.hud!.score).toBe(60);
      client.app.choose("finish");
      const done = await client.waitFor((s) => s.view?.finished === true, "terminal");
      expect(done.view!.outcome!.outcome_key).toBe("outcome.carbon.low");
      await client.waitFor((s) => s.profile?.global_score === 60, "profile");

      const record = readSessionFiles().find(
        (r) =>
          r.meta.player_id === client.state.playerId &&
          r.meta.scenario_id === "carbon-champions",
      )!;
      expect(record.end.status).toBe("finished");
      expect(record.end.outcome.final_score).toBe(60);
      expect(record.end.outcome.carbon_total).toBeCloseTo(3.4, 9);
      expect(record.last.record).toBe("crc");

      expect(client.state.seqViolations).toEqual([]);
      expect(client.state.errors).toEqual([]);
    } finally {
      client.close();
    }
  }, 30000);
});

describe("presence and chat", () => {
  it("keeps two clients' room views identical and rejects malformed moves", async () => {
    const cal = await TestClient.connect();
    const dee = await TestClient.connect();
    try {
      cal.app.hello("Cal", "en");
      await cal.waitFor((s) => s.phase === "world", "cal welcome");
      cal.app.enterRoom("plaza");
      await cal.waitFor((s) => s.room?.room_id === "plaza", "cal in plaza");

      dee.app.hello("Dee", "en");
      await dee.waitFor((s) => s.phase === "world", "dee welcome");
      dee.app.enterRoom("plaza");
      await dee.waitFor((s) => s.room?.room_id === "plaza", "dee in plaza");

      // cal hears the join as a delta; both lists converge
      await cal.waitFor(
        (s) => s.room?.occupants.some((o) => o.display_name === "Dee") === true,
        "cal sees dee join",
      );
      expect(cal.state.room!.occupants.map((o) => o.display_name)).toEqual(
        dee.state.room!.occupants.map((o) => o.display_name),
      );

      // the mover folds the same delta everyone else receives
      dee.app.move(3, 4);
      const deeMoved = (s: ClientState) =>
        s.room?.occupants.some((o) => o.display_name === "Dee" && o.x === 3 && o.y === 4) ===
        true;
      await cal.waitFor(deeMoved, "cal sees the move");
      await dee.waitFor(deeMoved, "dee folds own move");
      expect(cal.state.room!.occupants).toEqual(dee.state.room!.occupants);

      cal.app.chat("hello from the plaza");
      const gotChat = (s: ClientState) =>
        s.chat.some((c) => c.text === "hello from the plaza");
      await cal.waitFor(gotChat, "cal chat echo");
      await dee.waitFor(gotChat, "dee chat delivery");
      const calLast = cal.state.chat[cal.state.chat.length - 1];
      const deeLast = dee.state.chat[dee.state.chat.length - 1];
      expect(calLast).toEqual(deeLast);
      expect(deeLast.display_name).toBe("Cal");

      // a self-reported resync matches what the deltas built up
      const folded = dee.state.room;
      dee.app.syncRoom();
      await dee.waitFor((s) => s.room !== folded, "fresh snapshot");
      expect(dee.state.room!.occupants).toEqual(folded!.occupants);
      expect(dee.state.view).toBeNull();

      // an out-of-range move is refused without killing the connection
      dee.app.move(20001, 0);
      await dee.waitFor((s) => s.errors.length > 0, "move rejected");
      expect(dee.state.errors[0].code).toBe("bad_message");
      dee.app.chat("still alive");
      await dee.waitFor((s) => s.chat.some((c) => c.text === "still alive"), "still chatting");

      expect(cal.state.seqViolations).toEqual([]);
      expect(dee.state.seqViolations).toEqual([]);
    } finally {
      cal.close();
      dee.close();
    }
  }, 30000);
});
