async def fetch(session, url):
    async with session.get(url) as resp:
        return await resp.json()
