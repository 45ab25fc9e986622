"""Published reference constants."""
