def value_for(config, key):
    return config.get(key, 0)
