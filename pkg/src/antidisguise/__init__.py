"""Anti-disguise avatar authentication built on chameleon signcryption."""
