"""WebSocket transport for the world.

One receive loop per connection feeds World.handle_message; all world
mutation happens synchronously inside that call, so the event loop is the
serialization point.  Outbound envelopes go through a per-connection queue
drained by a dedicated writer task, which keeps delivery order identical to
sequence-assignment order even when a broadcast fans out mid-send.
"""

from __future__ import annotations

import asyncio
import json
import logging
from datetime import datetime, timezone

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from .world import World

log = logging.getLogger("raise.server")

_CLOSE = object()


def _log_event(event: str, **fields) -> None:
    entry = {"at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
             "event": event, **fields}
    log.info(json.dumps(entry, sort_keys=True))


class WorldServer:
    def __init__(self, world: World, host: str = "127.0.0.1", port: int = 8765):
        self.world = world
        self.host = host
        self.port = port
        self._queues: dict[int, asyncio.Queue] = {}
        self._writers: dict[int, asyncio.Task] = {}

    # -- outbound ---------------------------------------------------------

    def _deliver(self, outbound) -> None:
        # synchronous enqueue: preserves the seq order World assigned
        for conn_id, envelope in outbound:
            queue = self._queues.get(conn_id)
            if queue is not None:
                queue.put_nowait(envelope)

    async def _writer(self, conn_id: int, websocket) -> None:
        queue = self._queues[conn_id]
        while True:
            envelope = await queue.get()
            if envelope is _CLOSE:
                break
            try:
                await websocket.send(json.dumps(envelope, ensure_ascii=False,
                                                separators=(",", ":")))
            except ConnectionClosed:
                break

    # -- connection lifecycle ------------------------------------------------

    async def _handler(self, websocket) -> None:
        conn = self.world.connect()
        queue: asyncio.Queue = asyncio.Queue()
        self._queues[conn.conn_id] = queue
        writer = asyncio.get_running_loop().create_task(self._writer(conn.conn_id, websocket))
        self._writers[conn.conn_id] = writer
        _log_event("connect", conn=conn.conn_id,
                   peer=str(getattr(websocket, "remote_address", "")))
        try:
            async for raw in websocket:
                try:
                    msg = json.loads(raw)
                except ValueError:
                    msg = None  # handle_message answers with a bad_message error
                self._deliver(self.world.handle_message(conn, msg))
        except ConnectionClosed:
            pass
        finally:
            self._deliver(self.world.disconnect(conn))
            queue.put_nowait(_CLOSE)
            try:
                await writer
            finally:
                self._queues.pop(conn.conn_id, None)
                self._writers.pop(conn.conn_id, None)
            _log_event("disconnect", conn=conn.conn_id, player=conn.player_id)

    async def run(self, stop: asyncio.Event, ready: asyncio.Event | None = None) -> None:
        """Serve until the stop event fires, then flush all session records."""
        async with serve(self._handler, self.host, self.port,
                         ping_interval=None) as server:
            port = next(iter(server.sockets)).getsockname()[1]
            self.port = port
            _log_event("listen", host=self.host, port=port)
            if ready is not None:
                ready.set()
            await stop.wait()
            self.world.shutdown()
            _log_event("shutdown", connections=len(self.world.connections))


def run_server(world: World, host: str, port: int) -> None:
    """Blocking entry point; returns after SIGINT/SIGTERM."""
    import signal

    async def main():
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            try:
                loop.add_signal_handler(sig, stop.set)
            except NotImplementedError:
                pass
        server = WorldServer(world, host, port)
        await server.run(stop)

    asyncio.run(main())
