def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance: full benchmark-grid acceptance checks (slow; deselect with -m 'not acceptance')",
    )
