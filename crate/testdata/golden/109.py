def file_contents(title):
    handle = open(title)
    content = handle.read()
    handle.close()
    return content
