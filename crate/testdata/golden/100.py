def exists(config, key):
    return config.get(key) is not None
