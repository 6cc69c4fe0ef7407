def get_or_default(settings, key):
    return settings.get(key, 13)
