"""Tests for PAIR-Agent."""
