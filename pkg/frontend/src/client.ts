// WebSocket client: one persistent duplex connection carrying JSON
// messages, with reconnect backoff. The server is authoritative; the
// console only renders the latest snapshot it has received.

import { ClientMessage, Role, ServerMessage } from "./types";

export interface ClientHandlers {
  onSnapshot?: (msg: Extract<ServerMessage, { type: "snapshot" }>) => void;
  onAnnotation?: (msg: Extract<ServerMessage, { type: "annotation" }>) => void;
  onError?: (message: string) => void;
  onStatus?: (connected: boolean) => void;
}

export class ConsoleClient {
  private url: string;
  private handlers: ClientHandlers;
  private ws: WebSocket | null = null;
  private closed = false;
  private backoffMs = 500;

  constructor(server: string, role: Role, handlers: ClientHandlers) {
    this.url = `ws://${server}/ws?role=${role}`;
    this.handlers = handlers;
    this.connect();
  }

  private connect(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoffMs = 500;
      this.handlers.onStatus?.(true);
    };
    ws.onmessage = (ev: MessageEvent) => {
      let msg: ServerMessage;
      try {
        msg = JSON.parse(ev.data as string);
      } catch {
        return;
      }
      if (msg.type === "snapshot") this.handlers.onSnapshot?.(msg);
      else if (msg.type === "annotation") this.handlers.onAnnotation?.(msg);
      else if (msg.type === "error") this.handlers.onError?.(msg.message);
    };
    ws.onclose = () => {
      this.handlers.onStatus?.(false);
      if (!this.closed) {
        setTimeout(() => this.connect(), this.backoffMs);
        this.backoffMs = Math.min(5000, this.backoffMs * 2);
      }
    };
    ws.onerror = () => ws.close();
  }

  send(msg: ClientMessage): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
