def slurp(text):
    handle = open(text)
    content = handle.read()
    handle.close()
    return content
