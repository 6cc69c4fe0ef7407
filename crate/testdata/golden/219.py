def exceptions():
    try:
        import json
    except (ImportError, KeyError):
        json = None
    return json
