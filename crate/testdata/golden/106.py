def file_contents(content):
    with open(content) as handle:
        return handle.read()
