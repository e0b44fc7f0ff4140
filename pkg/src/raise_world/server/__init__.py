"""Multi-user world server: rooms, sessions, persistence, wire transport."""
