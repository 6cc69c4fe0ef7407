def clean(raw):
    return raw.lstrip().rstrip()
