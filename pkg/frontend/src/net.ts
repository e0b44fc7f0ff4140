// Thin socket wrapper: stamps outgoing seq, parses incoming envelopes.
//
// The constructor is injected so the browser passes window.WebSocket and
// the node tests pass the "ws" package class; both speak addEventListener
// with a .data payload on message events.

import { Envelope } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, handler: (event: any) => void): void;
}

export type SocketCtor = new (url: string) => SocketLike;

export class WorldSocket {
  onMessage: (env: Envelope) => void = () => {};
  onClose: () => void = () => {};
  private seq = 0;

  constructor(private raw: SocketLike) {
    raw.addEventListener("message", (event) => {
      let env: Envelope;
      try {
        env = JSON.parse(String(event.data));
      } catch {
        return; // server only sends JSON; drop anything else
      }
      this.onMessage(env);
    });
    raw.addEventListener("close", () => this.onClose());
  }

  static connect(url: string, ctor: SocketCtor): Promise<WorldSocket> {
    return new Promise((resolve, reject) => {
      const raw = new ctor(url);
      let settled = false;
      raw.addEventListener("open", () => {
        if (!settled) {
          settled = true;
          resolve(new WorldSocket(raw));
        }
      });
      raw.addEventListener("error", (event) => {
        if (!settled) {
          settled = true;
          reject(new Error(`websocket connect failed: ${event?.message ?? "error"}`));
        }
      });
    });
  }

  send(type: string, body: Record<string, unknown>): void {
    this.raw.send(JSON.stringify({ seq: this.seq, type, body }));
    this.seq += 1;
  }

  close(): void {
    this.raw.close();
  }
}
