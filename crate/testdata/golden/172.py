def contains(config, key):
    return config.get(key) is not None
